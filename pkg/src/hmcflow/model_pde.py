"""Linear degenerate model operator and its split existence construction.

The prototype operator

    L[f] = f_t - (z^2 a11 f_zz + 2 z a12 f_zy + a22 f_yy + b1 z f_z + b2 f_y + c f)

degenerates at z = 0.  Writing f = f°(y, t) + z^p f~(w, y, t) with w = ln z
splits the Cauchy problem into a uniformly parabolic 1D problem for the
trace f° (the equation governing the interface) and a uniformly parabolic
2D problem for f~ on the log half-plane.  The transformed coefficients are
derived by direct substitution:

    a^_ij = a_ij(e^w, y, t)
    b^_1  = (2p - 1) a11 + b1
    b^_2  = b2 + 2 p a12
    c^    = p (p - 1) a11 + p b1 + c
    G^    = ta22 f°_yy + tb2 f°_y + tc f°,   tX = e^{-pw} (X - X|_{z=0})

The published forms of b^_2, c^ and G^ differ (see printed_* helpers and
``transform_discrepancy_report``); the derived ones are what make the exact
splitting identity hold, which the test suite verifies both symbolically
and by finite-difference convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import factorized

from .errors import EllipticityError, GridMismatchError, WindowError

__all__ = [
    "ModelCoefficients",
    "TransformedCoefficients",
    "BoundarySolution",
    "TildeSolution",
    "apply_model_operator",
    "transform_coefficients",
    "solve_boundary_problem",
    "solve_tilde_problem",
    "reconstruct",
    "printed_hat_b2",
    "printed_hat_c_bracket",
    "transform_discrepancy_report",
]


def _as_coeff(c):
    """Normalize a coefficient to a callable (z, y, t) -> array."""
    if callable(c):
        return c
    val = float(c)
    return lambda z, y, t, _v=val: np.broadcast_to(
        _v, np.broadcast_shapes(np.shape(z), np.shape(y), np.shape(t))
    ).copy()


@dataclass(frozen=True)
class ModelCoefficients:
    """Coefficients of the model operator, scalars or callables of (z, y, t)."""

    a11: object = 1.0
    a12: object = 0.0
    a22: object = 1.0
    b1: object = 0.0
    b2: object = 0.0
    c: object = 0.0
    lambda_ell: float = 1.0

    def evaluate(self, z, y, t):
        z, y, t = np.broadcast_arrays(*np.meshgrid(z, y, t, indexing="ij"))
        out = {}
        for name in ("a11", "a12", "a22", "b1", "b2", "c"):
            out[name] = np.asarray(_as_coeff(getattr(self, name))(z, y, t), dtype=float)
        return out

    def check_ellipticity(self, z, y, t) -> float:
        """Smallest eigenvalue of [[a11, a12], [a12, a22]] over the sample.

        Raises when it drops below lambda_ell.
        """
        v = self.evaluate(z, y, t)
        half_tr = 0.5 * (v["a11"] + v["a22"])
        rad = np.sqrt(0.25 * (v["a11"] - v["a22"]) ** 2 + v["a12"] ** 2)
        lam_min = float((half_tr - rad).min())
        if lam_min < self.lambda_ell - 1e-12:
            raise EllipticityError(
                f"principal coefficient matrix has eigenvalue {lam_min:.3e} "
                f"below lambda_ell = {self.lambda_ell}"
            )
        return lam_min


@dataclass(frozen=True)
class TransformedCoefficients:
    """Log-coordinate coefficients of the tilde problem.

    All entries are callables of (w, y, t); hat_G is the inhomogeneity fed
    by the boundary solution (identically zero when the coefficients do not
    depend on z).
    """

    hat_a11: object
    hat_a12: object
    hat_a22: object
    hat_b1: object
    hat_b2: object
    hat_c: object
    hat_G: object
    p: float


def apply_model_operator(coeffs: ModelCoefficients, f: np.ndarray, z, y, t) -> np.ndarray:
    """Pointwise residual L[f] on the interior (z, y) nodes.

    f has shape (nz, ny, nt) on rectilinear grids; z and y derivatives are
    centered (so the result has shape (nz-2, ny-2, nt)), the t derivative is
    centered inside and one-sided second order at the endpoints.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape != (len(z), len(y), len(t)):
        raise GridMismatchError(
            f"field shape {f.shape} does not match grids "
            f"({len(z)}, {len(y)}, {len(t)})"
        )
    dz = z[1] - z[0]
    dy = y[1] - y[0]

    if len(t) == 1:
        ft = np.zeros_like(f)
    else:
        dt = t[1] - t[0]
        ft = np.empty_like(f)
        ft[:, :, 1:-1] = (f[:, :, 2:] - f[:, :, :-2]) / (2.0 * dt)
        if len(t) >= 3:
            ft[:, :, 0] = (-3.0 * f[:, :, 0] + 4.0 * f[:, :, 1] - f[:, :, 2]) / (2.0 * dt)
            ft[:, :, -1] = (3.0 * f[:, :, -1] - 4.0 * f[:, :, -2] + f[:, :, -3]) / (2.0 * dt)
        else:
            ft[:, :, 0] = (f[:, :, 1] - f[:, :, 0]) / dt
            ft[:, :, -1] = ft[:, :, 0]

    fz = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2.0 * dz)
    fzz = (f[2:, 1:-1] - 2.0 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / dz**2
    fy = (f[1:-1, 2:] - f[1:-1, :-2]) / (2.0 * dy)
    fyy = (f[1:-1, 2:] - 2.0 * f[1:-1, 1:-1] + f[1:-1, :-2]) / dy**2
    fzy = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4.0 * dz * dy)

    v = coeffs.evaluate(z[1:-1], y[1:-1], t)
    zc = z[1:-1][:, None, None]
    lf = ft[1:-1, 1:-1] - (
        zc**2 * v["a11"] * fzz
        + 2.0 * zc * v["a12"] * fzy
        + v["a22"] * fyy
        + v["b1"] * zc * fz
        + v["b2"] * fy
        + v["c"] * f[1:-1, 1:-1]
    )
    return lf


def printed_hat_b2(coeffs: ModelCoefficients):
    """First-order y coefficient exactly as published: b2 unchanged."""
    return _as_coeff(coeffs.b2)


def printed_hat_c_bracket(coeffs: ModelCoefficients, p: float):
    """Zeroth-order bracket exactly as published: p^2 a11 - 2p a12 + p b1."""
    a11 = _as_coeff(coeffs.a11)
    a12 = _as_coeff(coeffs.a12)
    b1 = _as_coeff(coeffs.b1)
    return lambda z, y, t: (
        p * p * a11(z, y, t) - 2.0 * p * a12(z, y, t) + p * b1(z, y, t)
    )


def transform_coefficients(
    coeffs: ModelCoefficients, p: float, boundary: "BoundarySolution | None" = None
) -> TransformedCoefficients:
    """Derived log-coordinate coefficients of the tilde problem.

    The derivation substitutes f = f° + e^{pw} f~ into the operator; the
    splitting-identity tests are the arbiter for the published variants.
    hat_G needs the boundary solution's y-derivatives and the coefficients'
    tilde parts; it is the zero function when no boundary solution is given
    or when the coefficients are z-independent.
    """
    if not (0.0 < p <= 1.0):
        raise ValueError("exponent p must satisfy 0 < p <= 1")
    a11 = _as_coeff(coeffs.a11)
    a12 = _as_coeff(coeffs.a12)
    a22 = _as_coeff(coeffs.a22)
    b1 = _as_coeff(coeffs.b1)
    b2 = _as_coeff(coeffs.b2)
    c = _as_coeff(coeffs.c)

    def at_z(fn):
        return lambda w, y, t: fn(np.exp(w), y, t)

    hat_b1 = lambda w, y, t: (2.0 * p - 1.0) * a11(np.exp(w), y, t) + b1(np.exp(w), y, t)
    hat_b2 = lambda w, y, t: b2(np.exp(w), y, t) + 2.0 * p * a12(np.exp(w), y, t)
    hat_c = lambda w, y, t: (
        p * (p - 1.0) * a11(np.exp(w), y, t)
        + p * b1(np.exp(w), y, t)
        + c(np.exp(w), y, t)
    )

    if boundary is None:
        hat_G = lambda w, y, t: np.zeros(
            np.broadcast_shapes(np.shape(w), np.shape(y), np.shape(t))
        )
    else:

        def hat_G(w, y, t, _b=boundary):
            z = np.exp(w)
            zero = np.zeros_like(z)
            emp = np.exp(-p * w)
            ta22 = emp * (a22(z, y, t) - a22(zero, y, t))
            tb2 = emp * (b2(z, y, t) - b2(zero, y, t))
            tc = emp * (c(z, y, t) - c(zero, y, t))
            f0, f0_y, f0_yy = _b.trace_with_derivatives(y, t)
            return ta22 * f0_yy + tb2 * f0_y + tc * f0

    return TransformedCoefficients(
        hat_a11=at_z(a11),
        hat_a12=at_z(a12),
        hat_a22=at_z(a22),
        hat_b1=hat_b1,
        hat_b2=hat_b2,
        hat_c=hat_c,
        hat_G=hat_G,
        p=p,
    )


def transform_discrepancy_report(coeffs: ModelCoefficients, p: float, w, y, t) -> dict:
    """Derived versus published transformed coefficients on a sample grid.

    Reports, per coefficient, the maximum absolute gap between the derived
    value and the published formula; the splitting-identity test justifies
    the derived side.
    """
    tc = transform_coefficients(coeffs, p)
    W, Y, T = np.meshgrid(np.asarray(w), np.asarray(y), np.asarray(t), indexing="ij")
    Z = np.exp(W)
    derived_b2 = tc.hat_b2(W, Y, T)
    printed_b2 = printed_hat_b2(coeffs)(Z, Y, T)
    derived_c = tc.hat_c(W, Y, T)
    printed_c = printed_hat_c_bracket(coeffs, p)(Z, Y, T)
    report = {
        "p": p,
        "hat_b2": {
            "derived": "b2 + 2*p*a12",
            "printed": "b2",
            "max_abs_gap": float(np.abs(derived_b2 - printed_b2).max()),
        },
        "hat_c": {
            "derived": "p*(p-1)*a11 + p*b1 + c",
            "printed_bracket": "p^2*a11 - 2*p*a12 + p*b1",
            "max_abs_gap": float(np.abs(derived_c - printed_c).max()),
        },
        "hat_G": {
            "derived": "ta22*f0_yy + tb2*f0_y + tc*f0 (tilde parts of coefficients)",
            "printed": "tb2*f0_y + hat_a22*f0_yy",
            "note": "printed form uses the full coefficient where the derivation "
            "gives its tilde part and omits the zeroth-order term",
        },
    }
    return report


# ---------------------------------------------------------------------------
# 1D boundary problem


@dataclass(frozen=True)
class BoundarySolution:
    """Trace solution f°(y, t) on a periodic y grid; values shape (nt, ny)."""

    y: np.ndarray
    t: np.ndarray
    values: np.ndarray
    min_history: np.ndarray
    max_history: np.ndarray

    def trace_with_derivatives(self, y_query, t_query):
        """f°, f°_y, f°_yy interpolated at broadcastable (y, t) queries.

        Periodic spectral-free interpolation: nearest time slice, centered
        differences on the stored grid, then linear interpolation in y.
        """
        dy = self.y[1] - self.y[0]
        vals = self.values
        f_y = (np.roll(vals, -1, axis=1) - np.roll(vals, 1, axis=1)) / (2 * dy)
        f_yy = (np.roll(vals, -1, axis=1) - 2 * vals + np.roll(vals, 1, axis=1)) / dy**2
        ti = np.clip(
            np.searchsorted(self.t, np.asarray(t_query, dtype=float)), 0, len(self.t) - 1
        )
        period = dy * len(self.y)
        yq = np.mod(np.asarray(y_query, dtype=float) - self.y[0], period)
        fi = yq / dy
        i0 = np.floor(fi).astype(int) % len(self.y)
        i1 = (i0 + 1) % len(self.y)
        frac = fi - np.floor(fi)

        def pick(arr):
            return (1.0 - frac) * arr[ti, i0] + frac * arr[ti, i1]

        return pick(vals), pick(f_y), pick(f_yy)


def _periodic_d1(n, h):
    e = np.ones(n)
    m = sp.diags([e, -e], [1, -1], shape=(n, n), format="lil")
    m[0, -1] = -1.0
    m[-1, 0] = 1.0
    return (m / (2.0 * h)).tocsr()


def _periodic_d2(n, h):
    e = np.ones(n)
    m = sp.diags([e, -2.0 * e, e], [1, 0, -1], shape=(n, n), format="lil")
    m[0, -1] = 1.0
    m[-1, 0] = 1.0
    return (m / h**2).tocsr()


def solve_boundary_problem(
    coeffs: ModelCoefficients,
    y: np.ndarray,
    f0_init: np.ndarray,
    phi,
    t_end: float,
    dt: float,
) -> BoundarySolution:
    """Backward-Euler solve of the trace equation at z = 0.

    f°_t = a22° f°_yy + b2° f°_y + c° f° + phi° on a periodic y grid; this
    is the equation that governs the interface.  Requires a22° >= lambda_ell
    (strict parabolicity at the boundary).
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    dy = y[1] - y[0]
    nt = int(round(t_end / dt)) + 1
    t = np.linspace(0.0, t_end, nt)

    a22 = _as_coeff(coeffs.a22)
    b2 = _as_coeff(coeffs.b2)
    cc = _as_coeff(coeffs.c)
    phi_f = _as_coeff(phi if phi is not None else 0.0)
    z0 = np.zeros_like(y)

    a_vals = a22(z0, y, 0.0)
    if np.min(a_vals) < coeffs.lambda_ell - 1e-12:
        raise EllipticityError(
            f"a22 at the boundary dips to {np.min(a_vals):.3e}, "
            f"below lambda_ell = {coeffs.lambda_ell}"
        )

    d1 = _periodic_d1(n, dy)
    d2 = _periodic_d2(n, dy)
    eye = sp.identity(n, format="csr")

    values = np.empty((nt, n))
    values[0] = np.asarray(f0_init, dtype=float)
    mins = np.empty(nt)
    maxs = np.empty(nt)
    mins[0], maxs[0] = values[0].min(), values[0].max()

    solver = None
    autonomous = all(not callable(getattr(coeffs, nm)) for nm in ("a22", "b2", "c"))
    for k in range(1, nt):
        tk = t[k]
        if solver is None or not autonomous:
            A = (
                sp.diags(a22(z0, y, tk)) @ d2
                + sp.diags(b2(z0, y, tk)) @ d1
                + sp.diags(cc(z0, y, tk))
            )
            solver = factorized((eye - dt * A).tocsc())
        rhs = values[k - 1] + dt * phi_f(z0, y, tk)
        values[k] = solver(rhs)
        mins[k], maxs[k] = values[k].min(), values[k].max()

    return BoundarySolution(y=y, t=t, values=values, min_history=mins, max_history=maxs)


# ---------------------------------------------------------------------------
# 2D tilde problem


@dataclass(frozen=True)
class TildeSolution:
    """Tilde solution f~(w, y, t) on the truncated log window.

    values has shape (nt, nw, ny).
    """

    w: np.ndarray
    y: np.ndarray
    t: np.ndarray
    values: np.ndarray
    min_history: np.ndarray
    max_history: np.ndarray


def _axis_ops(n, h, bc):
    """First/second derivative matrices for one axis.

    'periodic' wraps; 'outflow' closes with linear extrapolation ghosts,
    i.e. zero second derivative and one-sided first derivative at the ends.
    """
    if bc == "periodic":
        return _periodic_d1(n, h), _periodic_d2(n, h)
    if bc != "outflow":
        raise ValueError(f"unknown boundary condition {bc!r}")
    d1 = sp.lil_matrix((n, n))
    d2 = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        d1[i, i - 1] = -1.0 / (2 * h)
        d1[i, i + 1] = 1.0 / (2 * h)
        d2[i, i - 1] = 1.0 / h**2
        d2[i, i] = -2.0 / h**2
        d2[i, i + 1] = 1.0 / h**2
    d1[0, 0] = -1.0 / h
    d1[0, 1] = 1.0 / h
    d1[n - 1, n - 2] = -1.0 / h
    d1[n - 1, n - 1] = 1.0 / h
    # linear extrapolation ghost: second derivative vanishes at the ends
    return d1.tocsr(), d2.tocsr()


def solve_tilde_problem(
    tcoeffs: TransformedCoefficients,
    w: np.ndarray,
    y: np.ndarray,
    ft_init: np.ndarray,
    phi_tilde,
    t_end: float,
    dt: float,
    bc_w: str = "outflow",
    bc_y: str = "periodic",
    min_window: float = 8.0,
    autonomous: bool = True,
) -> TildeSolution:
    """Backward-Euler solve of the uniformly parabolic tilde problem.

    The half-space problem is infinite in w; the truncated window (at least
    ``min_window`` hyperbolic units wide unless overridden) closes with
    extrapolation outflow at both ends by default.  The hat_G source from
    the boundary solution is added to the supplied forcing.
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if w[-1] - w[0] < min_window:
        raise WindowError(
            f"w window of width {w[-1] - w[0]:.2f} is narrower than {min_window}"
        )
    nw, ny = len(w), len(y)
    hw = w[1] - w[0]
    hy = y[1] - y[0]
    nt = int(round(t_end / dt)) + 1
    t = np.linspace(0.0, t_end, nt)

    W2, Y2 = np.meshgrid(w, y, indexing="ij")

    def field(fn, tk):
        return np.asarray(fn(W2, Y2, tk), dtype=float)

    # ellipticity of the transformed principal part on the window
    a11_0 = field(tcoeffs.hat_a11, 0.0)
    a12_0 = field(tcoeffs.hat_a12, 0.0)
    a22_0 = field(tcoeffs.hat_a22, 0.0)
    half_tr = 0.5 * (a11_0 + a22_0)
    rad = np.sqrt(0.25 * (a11_0 - a22_0) ** 2 + a12_0**2)
    if float((half_tr - rad).min()) <= 0.0:
        raise EllipticityError("transformed coefficients lose ellipticity on the window")

    d1w, d2w = _axis_ops(nw, hw, bc_w)
    d1y, d2y = _axis_ops(ny, hy, bc_y)
    iw = sp.identity(nw, format="csr")
    iy = sp.identity(ny, format="csr")
    Dw = sp.kron(d1w, iy, format="csr")
    Dww = sp.kron(d2w, iy, format="csr")
    Dy = sp.kron(iw, d1y, format="csr")
    Dyy = sp.kron(iw, d2y, format="csr")
    Dwy = (Dw @ Dy).tocsr()
    eye = sp.identity(nw * ny, format="csr")

    values = np.empty((nt, nw, ny))
    values[0] = np.asarray(ft_init, dtype=float)
    mins = np.empty(nt)
    maxs = np.empty(nt)
    mins[0], maxs[0] = values[0].min(), values[0].max()

    phi_f = phi_tilde if phi_tilde is not None else (lambda W, Y, tk: np.zeros_like(W))

    solver = None
    for k in range(1, nt):
        tk = t[k]
        if solver is None or not autonomous:
            A = (
                sp.diags(field(tcoeffs.hat_a11, tk).ravel()) @ Dww
                + 2.0 * sp.diags(field(tcoeffs.hat_a12, tk).ravel()) @ Dwy
                + sp.diags(field(tcoeffs.hat_a22, tk).ravel()) @ Dyy
                + sp.diags(field(tcoeffs.hat_b1, tk).ravel()) @ Dw
                + sp.diags(field(tcoeffs.hat_b2, tk).ravel()) @ Dy
                + sp.diags(field(tcoeffs.hat_c, tk).ravel())
            )
            solver = factorized((eye - dt * A).tocsc())
        src = phi_f(W2, Y2, tk) + np.asarray(tcoeffs.hat_G(W2, Y2, tk), dtype=float)
        rhs = values[k - 1].ravel() + dt * src.ravel()
        values[k] = solver(rhs).reshape(nw, ny)
        mins[k], maxs[k] = values[k].min(), values[k].max()

    return TildeSolution(w=w, y=y, t=t, values=values, min_history=mins, max_history=maxs)


def reconstruct(boundary: BoundarySolution, tilde: TildeSolution, p: float):
    """Assemble f(z, y, t) = f°(y, t) + z^p f~(w, y, t).

    Returns (z, y, t, values) with values of shape (nt, nz, ny); the z grid
    is [0, e^{w_0}, ..., e^{w_last}] and the z = 0 slice equals f° exactly.
    """
    if len(boundary.y) != len(tilde.y) or not np.allclose(boundary.y, tilde.y):
        raise GridMismatchError("boundary and tilde solutions use different y grids")
    if len(boundary.t) != len(tilde.t) or not np.allclose(boundary.t, tilde.t):
        raise GridMismatchError("boundary and tilde solutions use different time axes")
    zpos = np.exp(tilde.w)
    z = np.concatenate([[0.0], zpos])
    nt, nw, ny = tilde.values.shape
    out = np.empty((nt, nw + 1, ny))
    out[:, 0, :] = boundary.values
    out[:, 1:, :] = boundary.values[:, None, :] + (zpos**p)[None, :, None] * tilde.values
    return z, tilde.y, tilde.t, out
