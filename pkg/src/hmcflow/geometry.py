"""Pointwise differential geometry of height fields z = h(x, y).

A height field stores the lower graph of a weakly convex body sitting on the
plane z = 0.  Derivatives come from second-order finite differences (centered
in the interior, one-sided on the outermost rings so that every node can be
differentiated), principal curvatures from the shape operator of the graph,
and the normal velocity is the harmonic-mean combination K/H with the
degenerate flat limit pinned to exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvexityError, StencilError

__all__ = [
    "HeightField",
    "CurvaturePair",
    "hessian_and_gradient",
    "principal_curvatures",
    "harmonic_mean_velocity",
    "derivative_fields",
]


@dataclass(frozen=True)
class HeightField:
    """Discretized graph z = h(x, y) over a rectangular window.

    ``values[i, j]`` is the height at ``(x_i, y_j)`` with
    ``x_i = origin[0] + i*dx`` and ``y_j = origin[1] + j*dy``.  ``flat_tol``
    is the height below which a node can participate in the flat side.
    Instances are treated as immutable; evolution produces new objects.
    """

    dx: float
    dy: float
    origin: tuple[float, float]
    values: np.ndarray
    flat_tol: float = 1e-9

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise ValueError("values must be a 2D array")

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.dy * np.arange(self.ny)

    def validate(self, require_nonnegative: bool = True) -> None:
        """Check the basic invariants; raise ValueError on violation.

        Nonnegativity is the invariant of the physical problem class (the
        surface lives in z >= 0).  Comparison-principle auxiliaries (strictly
        convex barriers) legitimately dip below the plane, so the check can
        be waived explicitly.
        """
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("grid spacings must be positive")
        if self.nx < 5 or self.ny < 5:
            raise ValueError("grid must be at least 5x5 for the stencils")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values contain non-finite entries")
        if require_nonnegative and self.values.min() < 0.0:
            raise ValueError("height field has negative entries")

    def flat_mask(self) -> np.ndarray:
        """Nodes whose height, raw first and raw second differences all sit
        below flat_tol.  Raw means the undivided differences, so the test is
        unit-consistent with the height threshold and is exact on a frozen
        zero plateau."""
        hx, hy, hxx, hxy, hyy = derivative_fields(self.values, self.dx, self.dy)
        ft = self.flat_tol
        return (
            (np.abs(self.values) < ft)
            & (np.abs(hx) * self.dx < ft)
            & (np.abs(hy) * self.dy < ft)
            & (np.abs(hxx) * self.dx**2 < ft)
            & (np.abs(hyy) * self.dy**2 < ft)
            & (np.abs(hxy) * self.dx * self.dy < ft)
        )

    def with_values(self, values: np.ndarray) -> "HeightField":
        return replace(self, values=values)

    def same_grid(self, other: "HeightField", tol: float = 1e-12) -> bool:
        return (
            self.values.shape == other.values.shape
            and abs(self.dx - other.dx) <= tol
            and abs(self.dy - other.dy) <= tol
            and abs(self.origin[0] - other.origin[0]) <= tol
            and abs(self.origin[1] - other.origin[1]) <= tol
        )


@dataclass(frozen=True)
class CurvaturePair:
    """Ordered principal curvatures with their symmetric functions.

    K and H are stored as the exact product and sum of the eigenvalues so
    the defining identities hold bitwise.
    """

    lambda1: float
    lambda2: float
    K: float = field(init=False)
    H: float = field(init=False)

    def __post_init__(self):
        lo, hi = sorted((self.lambda1, self.lambda2))
        object.__setattr__(self, "lambda1", lo)
        object.__setattr__(self, "lambda2", hi)
        object.__setattr__(self, "K", lo * hi)
        object.__setattr__(self, "H", lo + hi)


def _d1(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order first derivative along an axis, one-sided at the ends."""
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def _d2(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order second derivative along an axis, one-sided at the ends."""
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    if v.shape[0] >= 4:
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
        out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    else:  # 3 nodes: fall back to the centered value
        out[0] = out[1]
        out[-1] = out[1]
    return np.moveaxis(out, 0, axis)


def derivative_fields(values, dx, dy):
    """Gradient and Hessian arrays for the whole grid.

    Returns (hx, hy, hxx, hxy, hyy).  Centered differences in the interior,
    one-sided second-order stencils where a centered one does not fit.
    """
    values = np.asarray(values, dtype=float)
    hx = _d1(values, dx, 0)
    hy = _d1(values, dy, 1)
    hxx = _d2(values, dx, 0)
    hyy = _d2(values, dy, 1)
    hxy = _d1(_d1(values, dx, 0), dy, 1)
    return hx, hy, hxx, hxy, hyy


def hessian_and_gradient(field: HeightField, i: int, j: int):
    """Centered second-order derivatives of h at interior node (i, j).

    Returns (gradient, hessian) as a 2-vector and a symmetric 2x2 array.
    Exact for polynomials of degree <= 2 sampled on the grid.
    """
    if not (1 <= i <= field.nx - 2 and 1 <= j <= field.ny - 2):
        raise StencilError(
            f"node ({i}, {j}) has no centered stencil in a "
            f"{field.nx}x{field.ny} grid"
        )
    v = field.values
    dx, dy = field.dx, field.dy
    gx = (v[i + 1, j] - v[i - 1, j]) / (2.0 * dx)
    gy = (v[i, j + 1] - v[i, j - 1]) / (2.0 * dy)
    hxx = (v[i + 1, j] - 2.0 * v[i, j] + v[i - 1, j]) / dx**2
    hyy = (v[i, j + 1] - 2.0 * v[i, j] + v[i, j - 1]) / dy**2
    hxy = (
        v[i + 1, j + 1] - v[i + 1, j - 1] - v[i - 1, j + 1] + v[i - 1, j - 1]
    ) / (4.0 * dx * dy)
    return np.array([gx, gy]), np.array([[hxx, hxy], [hxy, hyy]])


def principal_curvatures(gradient, hessian) -> CurvaturePair:
    """Principal curvatures of the graph z = h from one point's derivatives.

    Eigenvalues of the shape operator g^{-1} b with first fundamental form
    g = I + grad grad^T and second fundamental form b = Hess/W, W^2 = 1+|grad|^2,
    oriented so a convex bowl has positive curvatures.  Computed through the
    trace/determinant closed forms, which are algebraically identical to the
    eigenvalues of g^{-1} b.
    """
    gx, gy = float(gradient[0]), float(gradient[1])
    hxx = float(hessian[0][0])
    hyy = float(hessian[1][1])
    hxy = 0.5 * (float(hessian[0][1]) + float(hessian[1][0]))
    w2 = 1.0 + gx * gx + gy * gy
    K = (hxx * hyy - hxy * hxy) / (w2 * w2)
    H = ((1.0 + gy * gy) * hxx - 2.0 * gx * gy * hxy + (1.0 + gx * gx) * hyy) / w2**1.5
    disc = H * H - 4.0 * K
    root = np.sqrt(max(disc, 0.0))
    return CurvaturePair(lambda1=0.5 * (H - root), lambda2=0.5 * (H + root))


def harmonic_mean_velocity(
    pair: CurvaturePair,
    h_floor: float = 1e-12,
    clamp_tol: float = 1e-8,
) -> float:
    """Normal speed K/H = l1*l2/(l1+l2) with the degenerate limit fixed.

    On the flat side both curvatures vanish and the speed is defined to be
    exactly 0 (the flat side does not move in its normal direction).  Small
    negative eigenvalues within clamp_tol are discretization noise and are
    clamped to zero; anything more negative means the flow has left the
    weakly convex class.
    """
    if pair.lambda1 < -clamp_tol:
        raise ConvexityError(
            f"lambda1 = {pair.lambda1:.3e} below -clamp_tol = {-clamp_tol:.3e}"
        )
    l1 = max(pair.lambda1, 0.0)
    l2 = max(pair.lambda2, 0.0)
    H = l1 + l2
    if H <= h_floor:
        return 0.0
    return l1 * l2 / H
