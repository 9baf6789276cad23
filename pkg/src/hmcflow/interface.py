"""Flat-side boundary extraction and an independent curve shortening flow.

The interface between the flat side and the strictly convex part is pulled
out of a height field as a marching-squares level set, and a standalone
polyline integrator for curve shortening flow provides the reference law the
extracted interface is measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage import measure

from .errors import CurveError, InterfaceError
from .geometry import HeightField

__all__ = [
    "Curve",
    "extract_interface",
    "csf_step",
    "csf_run",
    "curve_distance",
    "resample",
]


@dataclass(frozen=True)
class Curve:
    """Closed planar polyline, counterclockwise, last point not repeated."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise CurveError("points must be an (n, 2) array")
        if pts.shape[0] < 8:
            raise CurveError(f"closed curve needs >= 8 points, got {pts.shape[0]}")
        seg = np.roll(pts, -1, axis=0) - pts
        if (np.hypot(seg[:, 0], seg[:, 1]) == 0.0).any():
            raise CurveError("consecutive points must be distinct")
        if self.signed_area() <= 0.0:
            raise CurveError("curve must be counterclockwise (positive area)")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def signed_area(self) -> float:
        x, y = self.points[:, 0], self.points[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        return float(0.5 * np.sum(x * yn - xn * y))

    def perimeter(self) -> float:
        seg = np.roll(self.points, -1, axis=0) - self.points
        return float(np.hypot(seg[:, 0], seg[:, 1]).sum())

    def min_segment_length(self) -> float:
        seg = np.roll(self.points, -1, axis=0) - self.points
        return float(np.hypot(seg[:, 0], seg[:, 1]).min())

    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def is_simple(self) -> bool:
        """Brute-force segment intersection test (validation use only)."""
        p = self.points
        n = self.n
        a0 = p
        a1 = np.roll(p, -1, axis=0)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # shared endpoint
                if _segments_cross(a0[i], a1[i], a0[j], a1[j]):
                    return False
        return True


def _cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _segments_cross(p0, p1, q0, q1) -> bool:
    d1 = _cross2(p1 - p0, q0 - p0)
    d2 = _cross2(p1 - p0, q1 - p0)
    d3 = _cross2(q1 - q0, p0 - q0)
    d4 = _cross2(q1 - q0, p1 - q0)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def extract_interface(field: HeightField, level: float) -> Curve | None:
    """Marching-squares contour of h = level, ordered counterclockwise.

    Returns None when the level set is empty (no flat side in the window, or
    the contour is so small it has no polygon at grid resolution).  A
    contour that exits the domain (open) or splits into several closed
    components violates the one-flat-side setting and raises.
    """
    if level <= 0.0:
        raise ValueError("level must be positive")
    contours = measure.find_contours(field.values, level)
    if not contours:
        return None

    closed = []
    for c in contours:
        if np.allclose(c[0], c[-1]):
            closed.append(c[:-1])
        else:
            raise InterfaceError(
                "level-set contour exits the domain; the interface must close "
                "inside the window"
            )
    if len(closed) > 1:
        raise InterfaceError(
            f"level set has {len(closed)} components; expected a single interface"
        )

    c = closed[0]
    if c.shape[0] < 8:
        return None  # sub-grid speck, not a usable interface
    # index space (i, j) -> physical (x, y)
    pts = np.column_stack(
        [field.origin[0] + c[:, 0] * field.dx, field.origin[1] + c[:, 1] * field.dy]
    )
    # drop consecutive duplicates that interpolation can produce
    keep = np.ones(pts.shape[0], dtype=bool)
    d = np.hypot(*(pts - np.roll(pts, 1, axis=0)).T)
    keep[d < 1e-12 * max(field.dx, field.dy)] = False
    keep[0] = True
    pts = pts[keep]
    if pts.shape[0] < 8:
        return None
    area = 0.5 * np.sum(
        pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1]
    )
    if area < 0.0:
        pts = pts[::-1]
    return Curve(points=pts)


def _vertex_curvature_and_normal(points: np.ndarray):
    """Signed discrete curvature from circumscribed circles over vertex
    triples, and the outward unit normal of a counterclockwise curve."""
    prev_ = np.roll(points, 1, axis=0)
    next_ = np.roll(points, -1, axis=0)
    e1 = points - prev_
    e2 = next_ - points
    chord = next_ - prev_
    l1 = np.hypot(e1[:, 0], e1[:, 1])
    l2 = np.hypot(e2[:, 0], e2[:, 1])
    lc = np.hypot(chord[:, 0], chord[:, 1])
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    k = 2.0 * cross / np.maximum(l1 * l2 * lc, 1e-300)
    tang = chord / np.maximum(lc, 1e-300)[:, None]
    normal = np.column_stack([tang[:, 1], -tang[:, 0]])  # outward for CCW
    return k, normal


def csf_step(curve: Curve, dt: float) -> Curve | None:
    """Explicit curve-shortening step: each vertex moves by -k * N * dt.

    k is the circumscribed-circle curvature over vertex triples (exact on a
    circle) and N the outward normal, so convex curves shrink.  Returns None
    as the extinction signal when fewer than 8 usable vertices remain.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    limit = 0.25 * curve.min_segment_length() ** 2
    if dt > limit:
        raise ValueError(f"dt = {dt:.3e} exceeds the vertex-motion bound {limit:.3e}")
    k, normal = _vertex_curvature_and_normal(curve.points)
    moved = curve.points - dt * k[:, None] * normal

    # merge vertices that collapsed onto each other
    d = np.hypot(*(moved - np.roll(moved, 1, axis=0)).T)
    scale = max(np.ptp(moved[:, 0]), np.ptp(moved[:, 1]), 1e-300)
    keep = d > 1e-12 * scale
    keep[0] = True
    moved = moved[keep]
    if moved.shape[0] < 8:
        return None
    area = 0.5 * np.sum(
        moved[:, 0] * np.roll(moved[:, 1], -1) - np.roll(moved[:, 0], -1) * moved[:, 1]
    )
    if area <= 0.0:
        return None  # collapsed past extinction within one step
    return Curve(points=moved)


def resample(curve: Curve, n: int | None = None) -> Curve:
    """Redistribute vertices uniformly by arc length (linear interpolation)."""
    if n is None:
        n = curve.n
    if n < 8:
        raise CurveError("resampling below 8 points is not allowed")
    pts = np.vstack([curve.points, curve.points[:1]])
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    target = np.linspace(0.0, total, n, endpoint=False)
    x = np.interp(target, s, pts[:, 0])
    y = np.interp(target, s, pts[:, 1])
    return Curve(points=np.column_stack([x, y]))


def csf_run(
    curve: Curve,
    t_end: float,
    dt: float | None = None,
    dt_safety: float = 0.5,
    resample_every: int = 10,
):
    """Integrate curve shortening flow to t_end.

    Vertices are redistributed to uniform arc length every resample_every
    steps to prevent clustering.  Returns (curve_or_None, elapsed_time); the
    None signals extinction before t_end.
    """
    t = 0.0
    cur = curve
    step_i = 0
    while t < t_end:
        h = dt if dt is not None else dt_safety * 0.25 * cur.min_segment_length() ** 2
        h = min(h, t_end - t)
        if h <= 0.0:
            break
        nxt = csf_step(cur, h)
        if nxt is None:
            return None, t
        cur = nxt
        t += h
        step_i += 1
        if resample_every and step_i % resample_every == 0:
            cur = resample(cur)
    return cur, t


def _point_segment_distances(points: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray):
    """Distance of each point to the nearest of the segments [a_i, b_i]."""
    d = seg_b - seg_a  # (m, 2)
    len2 = np.maximum((d * d).sum(axis=1), 1e-300)
    rel = points[:, None, :] - seg_a[None, :, :]  # (n, m, 2)
    t = np.clip((rel * d[None, :, :]).sum(axis=2) / len2[None, :], 0.0, 1.0)
    proj = seg_a[None, :, :] + t[:, :, None] * d[None, :, :]
    dist = np.hypot(*(points[:, None, :] - proj).transpose(2, 0, 1))
    return dist.min(axis=1)


def curve_distance(a: Curve, b: Curve) -> float:
    """Symmetric Hausdorff distance between closed polylines.

    Vertices of each curve are measured against the full segments of the
    other, then the worst case over both directions is taken.
    """
    a_pts, b_pts = a.points, b.points
    a0, a1 = a_pts, np.roll(a_pts, -1, axis=0)
    b0, b1 = b_pts, np.roll(b_pts, -1, axis=0)
    d_ab = _point_segment_distances(a_pts, b0, b1).max()
    d_ba = _point_segment_distances(b_pts, a0, a1).max()
    return float(max(d_ab, d_ba))
