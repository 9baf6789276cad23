"""Analytic apparatus as computations: pressure transform, non-degeneracy
monitors, boundary-flattened log coordinates, hyperbolic distances, and
discrete weighted Hölder norms with their localization boxes.

The pressure g = h^p (0 < p < 1) turns the degenerate height profile into a
function with a nondegenerate gradient at the interface.  Fields near the
flat boundary are decomposed into a boundary trace f°(y) plus a weighted
remainder f~(w, y) = e^{-pw} (f - f°), w = ln z; the remainder lives on a
log grid where the hyperbolic metric dz^2/z^2 + dy^2 becomes euclidean, so
all the Hölder machinery reduces to classical norms of the two parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import DomainError, SamplingError, WindowError
from .geometry import HeightField
from .interface import Curve

__all__ = [
    "PressureField",
    "LogField",
    "NormReport",
    "StarReport",
    "BoxIndices",
    "pressure",
    "check_star",
    "check_star_star",
    "log_decompose",
    "reconstruct_from_log",
    "hyperbolic_distance",
    "parabolic_distance",
    "holder_norm",
    "schauder_box",
]


@dataclass(frozen=True)
class PressureField:
    """g = h^p on the same grid as the source height field."""

    dx: float
    dy: float
    origin: tuple[float, float]
    values: np.ndarray
    p: float

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.values.shape[0])

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.dy * np.arange(self.values.shape[1])


def pressure(field: HeightField, p: float) -> PressureField:
    """Pointwise power transform g = h^p; the zero set is preserved exactly."""
    if not (0.0 < p < 1.0):
        raise ValueError("pressure exponent must satisfy 0 < p < 1")
    g = np.power(np.maximum(field.values, 0.0), p)
    return PressureField(
        dx=field.dx, dy=field.dy, origin=field.origin, values=g, p=p
    )


# ---------------------------------------------------------------------------
# interface non-degeneracy


@dataclass(frozen=True)
class StarReport:
    """Margins of the interface non-degeneracy condition.

    min_grad is the smallest |Dg| and min_tangential_second the smallest
    second derivative of g along the level-set tangent, both sampled a
    fixed clearance inside the positive set along the interface.
    """

    min_grad: float
    min_tangential_second: float
    lam: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.min_grad >= self.lam and self.min_tangential_second >= self.lam


def check_star(
    g: PressureField,
    interface: Curve,
    lam: float,
    offset_factor: float = 6.0,
    max_retries: int = 4,
) -> StarReport:
    """Sample (|Dg|, g_tt) along the interface and report the minima.

    Each interface vertex is pushed offset_factor grid cells into the
    positive set along the outward normal of the curve.  The tangential
    direction is the 90-degree rotation of Dg/|Dg| and g_tt is a second
    difference along it with step 2*dx, evaluated on a bicubic spline of g
    (bilinear sampling would destroy the accuracy of that stencil).  The
    pressure field has a slope kink at the interface and the spline's
    ringing decays by ~4x per cell, so the default offset keeps the whole
    stencil clear of the contaminated band; samples whose stencil falls
    back into the flat set are retried farther out and dropped only if no
    offset works.
    """
    if interface is None or interface.n == 0:
        raise ValueError("interface must be a nonempty curve")
    x, y = g.x, g.y
    spline = RectBivariateSpline(x, y, g.values, kx=3, ky=3)
    h = max(g.dx, g.dy)
    step = 2.0 * g.dx
    flat_level = g.values.max() * 1e-12

    pts = interface.points
    chord = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
    tang = chord / np.maximum(np.hypot(chord[:, 0], chord[:, 1]), 1e-300)[:, None]
    outward = np.column_stack([tang[:, 1], -tang[:, 0]])

    lo = np.array([x[0] + 2 * g.dx, y[0] + 2 * g.dy])
    hi = np.array([x[-1] - 2 * g.dx, y[-1] - 2 * g.dy])

    min_grad = math.inf
    min_gtt = math.inf
    n_ok = 0
    for pt, nu in zip(pts, outward):
        sample = None
        for attempt in range(max_retries):
            q = pt + offset_factor * h * (1.5**attempt) * nu
            if (q < lo).any() or (q > hi).any():
                continue
            gx = float(spline(q[0], q[1], dx=1, dy=0, grid=False))
            gy = float(spline(q[0], q[1], dx=0, dy=1, grid=False))
            norm = math.hypot(gx, gy)
            if norm == 0.0:
                continue
            tau = np.array([-gy, gx]) / norm
            stencil = [q, q + step * tau, q - step * tau]
            vals = [float(spline(s[0], s[1], grid=False)) for s in stencil]
            if min(vals) <= flat_level:
                continue  # stencil dipped into the flat set: push farther out
            gtt = (vals[1] - 2.0 * vals[0] + vals[2]) / step**2
            sample = (norm, gtt)
            break
        if sample is None:
            continue
        n_ok += 1
        min_grad = min(min_grad, sample[0])
        min_gtt = min(min_gtt, sample[1])

    if n_ok == 0:
        raise SamplingError("no interface sample found a valid offset")
    return StarReport(
        min_grad=min_grad, min_tangential_second=min_gtt, lam=lam, n_samples=n_ok
    )


def check_star_star(z: np.ndarray, y: np.ndarray, values: np.ndarray, p: float) -> float:
    """Eigenvalue margin of the rotated-graph non-degeneracy matrix.

    For x = f(z, y) the matrix [[-z^{2-p} f_zz, z^{1-p} f_zy],
    [z^{1-p} f_zy, -f_yy]] must have both eigenvalues bounded below; the
    returned margin is the minimum of the smaller eigenvalue over the
    interior sample nodes.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    f = np.asarray(values, dtype=float)
    if (z <= 0.0).any():
        raise DomainError("check_star_star requires z > 0 samples")
    dz = z[1] - z[0]
    dy = y[1] - y[0]
    fzz = (f[2:, 1:-1] - 2.0 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / dz**2
    fyy = (f[1:-1, 2:] - 2.0 * f[1:-1, 1:-1] + f[1:-1, :-2]) / dy**2
    fzy = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4.0 * dz * dy)
    zc = z[1:-1][:, None]
    m11 = -(zc ** (2.0 - p)) * fzz
    m12 = (zc ** (1.0 - p)) * fzy
    m22 = -fyy
    half_tr = 0.5 * (m11 + m22)
    rad = np.sqrt(0.25 * (m11 - m22) ** 2 + m12 * m12)
    return float((half_tr - rad).min())


# ---------------------------------------------------------------------------
# log coordinates


@dataclass(frozen=True)
class LogField:
    """Decomposition f = f°(y) + z^p f~(w, y) on a truncated log grid.

    boundary_part has shape (ny,) or (ny, nt); tilde_part (nw, ny) or
    (nw, ny, nt).  The w grid is strictly increasing; t is None for purely
    spatial fields.
    """

    p: float
    w: np.ndarray
    y: np.ndarray
    boundary_part: np.ndarray
    tilde_part: np.ndarray
    t: np.ndarray | None = None

    def __post_init__(self):
        if np.any(np.diff(self.w) <= 0):
            raise ValueError("w grid must be strictly increasing")

    @property
    def z(self) -> np.ndarray:
        return np.exp(self.w)

    @property
    def has_time(self) -> bool:
        return self.t is not None


def log_decompose(
    z: np.ndarray,
    y: np.ndarray,
    values: np.ndarray,
    p: float,
    w_min: float | None = None,
    w_max: float | None = None,
) -> LogField:
    """Split a field sampled on (z, y), z[0] = 0, into (f°, f~).

    f°(y) = f(0, y) and f~(w, y) = e^{-pw}(f(z, y) - f°(y)) on the z > 0
    nodes whose w = ln z falls inside [w_min, w_max] (defaults: the whole
    positive grid).  The round trip f° + z^p f~ reproduces the source
    exactly up to floating point.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    f = np.asarray(values, dtype=float)
    if z[0] != 0.0:
        raise DomainError("log_decompose needs the boundary row z[0] = 0")
    boundary = f[0].copy()
    zpos = z[1:]
    w_all = np.log(zpos)
    lo = -np.inf if w_min is None else w_min
    hi = np.inf if w_max is None else w_max
    keep = (w_all >= lo) & (w_all <= hi)
    if not keep.any():
        raise WindowError(f"no z > 0 nodes fall in the window [{lo}, {hi}]")
    w = w_all[keep]
    zsel = zpos[keep]
    weight = np.exp(-p * w)
    shape = (len(w),) + (1,) * (f.ndim - 1)
    tilde = weight.reshape(shape) * (f[1:][keep] - boundary[None, ...])
    return LogField(p=p, w=w, y=y, boundary_part=boundary, tilde_part=tilde)


def reconstruct_from_log(lf: LogField):
    """Inverse of log_decompose: returns (z, y, values) including z = 0."""
    zpos = lf.z
    weight = zpos**lf.p
    w = weight.reshape((len(zpos),) + (1,) * (lf.tilde_part.ndim - 1))
    vals_pos = lf.boundary_part[None, ...] + w * lf.tilde_part
    values = np.concatenate([lf.boundary_part[None, ...], vals_pos], axis=0)
    z = np.concatenate([[0.0], zpos])
    return z, lf.y, values


# ---------------------------------------------------------------------------
# distances


def hyperbolic_distance(p1, p2) -> float:
    """Distance sqrt(|ln z1 - ln z2|^2 + |y1 - y2|^2) on the strip z <= 1.

    Above the strip the metric only needs to be equivalent to euclidean:
    both points at z >= 1 use the plain euclidean distance, and a straddling
    pair pays the clamped in-strip distance plus the euclidean excess above
    z = 1.  The flat boundary z = 0 sits at infinite distance.
    """
    z1, y1 = float(p1[0]), float(p1[1])
    z2, y2 = float(p2[0]), float(p2[1])
    if z1 <= 0.0 or z2 <= 0.0:
        raise DomainError("hyperbolic distance requires z > 0")
    if z1 <= 1.0 and z2 <= 1.0:
        return math.hypot(math.log(z1) - math.log(z2), y1 - y2)
    if z1 >= 1.0 and z2 >= 1.0:
        return math.hypot(z1 - z2, y1 - y2)
    base = math.hypot(math.log(min(z1, 1.0)) - math.log(min(z2, 1.0)), y1 - y2)
    return base + abs(max(z1, 1.0) - max(z2, 1.0))


def parabolic_distance(p1, p2) -> float:
    """Space-time distance: hyperbolic part plus sqrt(|t1 - t2|)."""
    d = hyperbolic_distance(p1[:2], p2[:2])
    return d + math.sqrt(abs(float(p1[2]) - float(p2[2])))


# ---------------------------------------------------------------------------
# discrete Hölder norms


@dataclass(frozen=True)
class NormReport:
    """Discrete weighted Hölder norm, split into sup and seminorm parts.

    total = c0 + holder_seminorm by construction; parts holds the
    per-component contributions keyed by field name for diagnostics.
    """

    c0: float
    holder_seminorm: float
    total: float
    alpha: float
    pairs_sampled: int
    parts: dict

    def as_dict(self) -> dict:
        return {
            "c0": self.c0,
            "holder_seminorm": self.holder_seminorm,
            "total": self.total,
            "alpha": self.alpha,
            "pairs_sampled": self.pairs_sampled,
            "parts": self.parts,
        }


def _as3d(arr: np.ndarray) -> np.ndarray:
    """View (nw, ny) fields as (nw, ny, 1) so time is always an axis."""
    return arr if arr.ndim == 3 else arr[:, :, None]


def _trace2d(arr: np.ndarray) -> np.ndarray:
    return arr if arr.ndim == 2 else arr[:, None]


def _pair_indices(shape, seed: int, n_random: int):
    """Structured short-range pairs plus seeded random long-range pairs.

    Short range: every node paired with neighbors at index offsets up to 2
    along each axis.  The sampled sup is a certified lower bound of the true
    discrete sup.
    """
    sizes = [s for s in shape]
    idx = np.indices(shape).reshape(len(shape), -1)
    n = idx.shape[1]
    if n < 2:
        raise SamplingError("need at least two nodes for pair sampling")
    offsets = []
    rng_offsets = [(-2, -1, 0, 1, 2)] * len(shape)
    from itertools import product

    for off in product(*rng_offsets):
        if any(o != 0 for o in off) and off > tuple([0] * len(shape)):
            offsets.append(off)
    first_list = []
    second_list = []
    for off in offsets:
        sl_a = tuple(
            slice(max(0, -o), min(s, s - o)) for o, s in zip(off, sizes)
        )
        sl_b = tuple(
            slice(max(0, o), min(s, s + o)) for o, s in zip(off, sizes)
        )
        a = np.indices(shape)[(slice(None),) + sl_a].reshape(len(shape), -1)
        b = np.indices(shape)[(slice(None),) + sl_b].reshape(len(shape), -1)
        first_list.append(a)
        second_list.append(b)
    first = np.concatenate(first_list, axis=1)
    second = np.concatenate(second_list, axis=1)

    rng = np.random.default_rng(seed)
    ra = rng.integers(0, n, size=n_random)
    rb = rng.integers(0, n, size=n_random)
    keep = ra != rb
    first = np.concatenate([first, idx[:, ra[keep]]], axis=1)
    second = np.concatenate([second, idx[:, rb[keep]]], axis=1)
    return first, second


def _sampled_seminorm(values, coords, alpha, seed, n_random, mask=None):
    """sup |f(P1) - f(P2)| / dist(P1, P2)^alpha over the sampled pairs.

    coords is a tuple of (coordinate array, is_time) per axis; the distance
    is euclidean over the space axes plus sqrt(|dt|) over a time axis.  A
    boolean mask restricts the sample to pairs with both endpoints inside,
    so a restricted sup is a sup over a subset of the same pairs and norm
    monotonicity under restriction holds by construction.
    """
    shape = values.shape
    first, second = _pair_indices(shape, seed, n_random)
    if mask is not None:
        inside = mask[tuple(first)] & mask[tuple(second)]
        first = first[:, inside]
        second = second[:, inside]
        if first.shape[1] == 0:
            raise SamplingError("restriction removed every sampled pair")
    f1 = values[tuple(first)]
    f2 = values[tuple(second)]
    space2 = 0.0
    time_part = 0.0
    for ax, (carr, is_time) in enumerate(coords):
        c1 = carr[first[ax]]
        c2 = carr[second[ax]]
        if is_time:
            time_part = time_part + np.sqrt(np.abs(c1 - c2))
        else:
            space2 = space2 + (c1 - c2) ** 2
    dist = np.sqrt(space2) + time_part
    good = dist > 0
    if not good.any():
        raise SamplingError("all sampled pairs coincide")
    q = np.abs(f1[good] - f2[good]) / dist[good] ** alpha
    return float(q.max()), int(good.sum())


def _component_norm(name, values, coords, alpha, seed, n_random, parts, mask=None):
    vals = values if mask is None else values[mask]
    c0 = float(np.abs(vals).max())
    semi, npairs = _sampled_seminorm(values, coords, alpha, seed, n_random, mask=mask)
    parts[name] = {"c0": c0, "seminorm": semi}
    return c0, semi, npairs


def _dw(arr3, w):
    out = np.empty_like(arr3)
    out[1:-1] = (arr3[2:] - arr3[:-2]) / (w[2:] - w[:-2])[:, None, None]
    out[0] = (arr3[1] - arr3[0]) / (w[1] - w[0])
    out[-1] = (arr3[-1] - arr3[-2]) / (w[-1] - w[-2])
    return out


def _dy(arr, y, axis):
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (y[2:] - y[:-2]).reshape((-1,) + (1,) * (a.ndim - 1))
    out[0] = (a[1] - a[0]) / (y[1] - y[0])
    out[-1] = (a[-1] - a[-2]) / (y[-1] - y[-2])
    return np.moveaxis(out, 0, axis)


def holder_norm(
    lf: LogField,
    alpha: float,
    mode: str = "C_alpha_p",
    seed: int = 0,
    n_random: int = 10_000,
    restrict: tuple | None = None,
) -> NormReport:
    """Discrete weighted Hölder norm of a decomposed field.

    C_alpha_p: ||f°||_{C^a} + ||f~||_{C^a}, classical norms on the trace
    line and on the log plane (where the hyperbolic metric is euclidean).

    C_2alpha_p: ||f°||_{C^{2+a}} plus the C_alpha_p norms of the six
    weighted derivative fields f, z f_z, f_y, z^2 f_zz, z f_zy, f_yy.  On
    the log grid the weighted z-derivatives are plain w-derivatives
    (z f_z = f_w, z^2 f_zz = f_ww - f_w, z f_zy = f_wy), and their boundary
    traces vanish for fields in the class, so each weighted field is
    decomposed with its known trace and measured like a C_alpha_p field.

    Seminorms are sups over a reproducible pair sample (all short-range
    index pairs plus n_random seeded long-range pairs): certified lower
    bounds of the true discrete sups.

    restrict, when given, is a triple of boolean masks (over w, y, t) that
    localizes the norm to a sub-box of the same grid: derivative fields are
    still formed on the full grid, and the pair sample is filtered, so the
    restricted norm never exceeds the unrestricted one at the same seed.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must be in (0, 1]")
    if mode not in ("C_alpha_p", "C_2alpha_p"):
        raise ValueError(f"unknown mode {mode!r}")

    w = lf.w
    y = lf.y
    t = lf.t if lf.t is not None else np.zeros(1)
    f0 = _trace2d(np.asarray(lf.boundary_part, dtype=float))  # (ny, nt)
    ft = _as3d(np.asarray(lf.tilde_part, dtype=float))  # (nw, ny, nt)

    if restrict is None:
        mask2 = None
        mask3 = None
    else:
        wm, ym, tm = (np.asarray(m, dtype=bool) for m in restrict)
        mask2 = ym[:, None] & tm[None, :]
        mask3 = wm[:, None, None] & ym[None, :, None] & tm[None, None, :]

    trace_coords = ((y, False), (t, True))
    tilde_coords = ((w, False), (y, False), (t, True))

    parts: dict = {}
    c0_sum = 0.0
    semi_sum = 0.0
    pairs = 0

    if mode == "C_alpha_p":
        c0, semi, np1 = _component_norm(
            "boundary", f0, trace_coords, alpha, seed, n_random, parts, mask=mask2
        )
        c0_sum += c0
        semi_sum += semi
        pairs += np1
        c0, semi, np2 = _component_norm(
            "tilde", ft, tilde_coords, alpha, seed + 1, n_random, parts, mask=mask3
        )
        c0_sum += c0
        semi_sum += semi
        pairs += np2
    else:
        # boundary trace in C^{2+alpha}: sups of f°, f°_y, f°_yy plus the
        # Hölder seminorm of f°_yy
        f0_y = _dy(f0, y, 0)
        f0_yy = _dy(f0_y, y, 0)
        if mask2 is None:
            c0_b = float(np.abs(f0).max() + np.abs(f0_y).max() + np.abs(f0_yy).max())
        else:
            c0_b = float(
                np.abs(f0[mask2]).max()
                + np.abs(f0_y[mask2]).max()
                + np.abs(f0_yy[mask2]).max()
            )
        semi_b, np0 = _sampled_seminorm(
            f0_yy, trace_coords, alpha, seed, n_random, mask=mask2
        )
        parts["boundary_C2a"] = {"c0": c0_b, "seminorm": semi_b}
        c0_sum += c0_b
        semi_sum += semi_b
        pairs += np0

        # full field on the log grid and its weighted derivatives
        epw = np.exp(lf.p * w)[:, None, None]
        f_full = f0[None, :, :] + epw * ft
        f_w = _dw(f_full, w)
        f_y = _dy(f_full, y, 1)
        f_ww = _dw(f_w, w)
        f_wy = _dy(f_w, y, 1)
        f_yy = _dy(f_y, y, 1)

        weighted = {
            "f": (f_full, f0),
            "z_fz": (f_w, np.zeros_like(f0)),
            "f_y": (f_y, _dy(f0, y, 0)),
            "z2_fzz": (f_ww - f_w, np.zeros_like(f0)),
            "z_fzy": (f_wy, np.zeros_like(f0)),
            "f_yy": (f_yy, _dy(_dy(f0, y, 0), y, 0)),
        }
        emw = np.exp(-lf.p * w)[:, None, None]
        for k, (name, (u, u0)) in enumerate(weighted.items()):
            u_tilde = emw * (u - u0[None, :, :])
            c0, semi, np1 = _component_norm(
                name + "_trace",
                u0,
                trace_coords,
                alpha,
                seed + 2 * k,
                n_random,
                parts,
                mask=mask2,
            )
            c0_sum += c0
            semi_sum += semi
            pairs += np1
            c0, semi, np2 = _component_norm(
                name + "_tilde",
                u_tilde,
                tilde_coords,
                alpha,
                seed + 2 * k + 1,
                n_random,
                parts,
                mask=mask3,
            )
            c0_sum += c0
            semi_sum += semi
            pairs += np2

    return NormReport(
        c0=c0_sum,
        holder_seminorm=semi_sum,
        total=c0_sum + semi_sum,
        alpha=alpha,
        pairs_sampled=pairs,
        parts=parts,
    )


def sup_norm_0p(lf: LogField) -> float:
    """||f||_{C^{0,p}} = sup|f°| + sup|f~| (the weighted sup norm)."""
    return float(np.abs(lf.boundary_part).max() + np.abs(lf.tilde_part).max())


# ---------------------------------------------------------------------------
# localization boxes


@dataclass(frozen=True)
class BoxIndices:
    """Grid indices of an anisotropic localization box.

    The box around (z0, y0, t0) at scale r covers z in [z0 - e^r, z0 + e^r]
    intersected with z >= 0, |y - y0| <= r, and t in [t0 - r^2, t0].
    """

    z_idx: np.ndarray
    y_idx: np.ndarray
    t_idx: np.ndarray
    r: float
    center: tuple

    @property
    def node_count(self) -> int:
        return len(self.z_idx) * len(self.y_idx) * len(self.t_idx)


def schauder_box(
    point,
    r: float,
    z_grid: np.ndarray,
    y_grid: np.ndarray,
    t_grid: np.ndarray,
) -> BoxIndices:
    """Index set of grid nodes inside the box B_r(point).

    Used to localize holder_norm for the interior-estimate diagnostics; the
    anisotropy (e^r in z, r in y, r^2 back in t) matches the scaling of the
    degenerate operator.
    """
    if not (0.0 < r <= 1.0):
        raise ValueError("box scale r must be in (0, 1]")
    z0, y0, t0 = float(point[0]), float(point[1]), float(point[2])
    z_grid = np.asarray(z_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    er = math.exp(r)
    z_idx = np.flatnonzero((z_grid >= max(z0 - er, 0.0)) & (z_grid <= z0 + er))
    y_idx = np.flatnonzero(np.abs(y_grid - y0) <= r)
    t_idx = np.flatnonzero((t_grid >= t0 - r * r) & (t_grid <= t0))
    if len(z_idx) == 0 or len(y_idx) == 0 or len(t_idx) == 0:
        raise WindowError(f"box B_{r} around {point} contains no grid nodes")
    return BoxIndices(z_idx=z_idx, y_idx=y_idx, t_idx=t_idx, r=r, center=(z0, y0, t0))


def log_field_box_masks(lf: LogField, box: BoxIndices) -> tuple:
    """Boolean (w, y, t) masks selecting the nodes of a box in a LogField.

    The z-window [0, z0 + e^r] becomes w <= ln(z0 + e^r); suitable for the
    ``restrict`` argument of holder_norm.
    """
    zmax = box.center[0] + math.exp(box.r)
    wm = lf.z <= zmax
    ym = np.abs(lf.y - box.center[1]) <= box.r
    if lf.t is not None:
        tm = (lf.t >= box.center[2] - box.r**2) & (lf.t <= box.center[2])
    else:
        tm = np.ones(1, dtype=bool)
    if not (wm.any() and ym.any() and tm.any()):
        raise WindowError("box excludes every node of the field")
    return wm, ym, tm


def restrict_log_field(lf: LogField, box: BoxIndices) -> LogField:
    """Slice a LogField to the nodes of a localization box.

    The box z-window translates to w <= ln(z0 + e^r); boundary traces are
    restricted in y (and t).
    """
    zmax = box.center[0] + math.exp(box.r)
    wi = np.flatnonzero(lf.z <= zmax)
    if len(wi) == 0:
        raise WindowError("box excludes every positive-z node of the field")
    yi = np.flatnonzero(np.abs(lf.y - box.center[1]) <= box.r)
    if len(yi) == 0:
        raise WindowError("box excludes every y node of the field")
    f0 = _trace2d(np.asarray(lf.boundary_part))
    ft = _as3d(np.asarray(lf.tilde_part))
    if lf.t is not None:
        ti = np.flatnonzero((lf.t >= box.center[2] - box.r**2) & (lf.t <= box.center[2]))
        if len(ti) == 0:
            raise WindowError("box excludes every t node of the field")
        t_new = lf.t[ti]
        f0r = f0[np.ix_(yi, ti)]
        ftr = ft[np.ix_(wi, yi, ti)]
    else:
        t_new = None
        f0r = f0[yi, 0]
        ftr = ft[np.ix_(wi, yi)][:, :, 0]
    return LogField(
        p=lf.p, w=lf.w[wi], y=lf.y[yi], boundary_part=f0r, tilde_part=ftr, t=t_new
    )
