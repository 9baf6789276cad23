"""Independent reference solutions used as ground truth by the test suite.

Closed-form radius laws for shrinking spheres and circles, and a 1D
surface-of-revolution reduction of the flow that serves as a cheap
brute-force oracle for axisymmetric 2D runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import HmcflowError, StiffnessError

__all__ = [
    "ExtinctError",
    "RadialProfile",
    "sphere_radius",
    "circle_csf_radius",
    "radial_hmcf_step",
    "radial_hmcf_run",
]


class ExtinctError(HmcflowError):
    """The reference body has already shrunk to a point at the given time."""


def sphere_radius(R0: float, t: float) -> float:
    """Radius of a sphere evolved for time t.

    A sphere of radius R has both principal curvatures 1/R, so its normal
    speed is K/H = 1/(2R) and dR/dt = -1/(2R), giving R(t) = sqrt(R0^2 - t).
    """
    if t >= R0 * R0:
        raise ExtinctError(f"sphere of radius {R0} is extinct at t = {t}")
    return math.sqrt(R0 * R0 - t)


def circle_csf_radius(r0: float, t: float) -> float:
    """Radius of a circle under curve shortening flow: dr/dt = -1/r."""
    if t >= 0.5 * r0 * r0:
        raise ExtinctError(f"circle of radius {r0} is extinct at t = {t}")
    return math.sqrt(r0 * r0 - 2.0 * t)


@dataclass(frozen=True)
class RadialProfile:
    """Axisymmetric height profile h(rho) on a uniform radius grid.

    r[0] must be 0 (the axis).  The profile is extended evenly across the
    axis, h(-rho) = h(rho), which is what axisymmetry demands.
    """

    r: np.ndarray
    values: np.ndarray
    flat_tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.r[0] != 0.0:
            raise ValueError("radial grid must start at the axis rho = 0")

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])


def _radial_rhs(profile: RadialProfile):
    """Graph velocity h_t of the reduced axisymmetric flow.

    Meridian curvature  k_m = h''/W^3, parallel curvature k_p = h'/(rho W)
    with W^2 = 1 + h'^2; normal speed K/H = k_m k_p/(k_m + k_p); the graph
    rises at h_t = speed * W.  On the axis k_p -> h'' (removable
    singularity).  Flat nodes (height and raw differences below flat_tol)
    return exactly zero.
    """
    h = profile.values
    dr = profile.dr
    hp = np.empty_like(h)
    hpp = np.empty_like(h)
    hp[1:-1] = (h[2:] - h[:-2]) / (2.0 * dr)
    hpp[1:-1] = (h[2:] - 2.0 * h[1:-1] + h[:-2]) / dr**2
    # even symmetry h(-rho) = h(rho) at the axis
    hp[0] = 0.0
    hpp[0] = 2.0 * (h[1] - h[0]) / dr**2
    # one-sided at the outer end
    hp[-1] = (3.0 * h[-1] - 4.0 * h[-2] + h[-3]) / (2.0 * dr)
    hpp[-1] = (2.0 * h[-1] - 5.0 * h[-2] + 4.0 * h[-3] - h[-4]) / dr**2

    flat = (
        (np.abs(h) < profile.flat_tol)
        & (np.abs(hp) * dr < profile.flat_tol)
        & (np.abs(hpp) * dr**2 < profile.flat_tol)
    )

    w2 = 1.0 + hp * hp
    with np.errstate(divide="ignore", invalid="ignore"):
        kp_over = np.where(profile.r > 0.0, hp / np.where(profile.r > 0, profile.r, 1.0), hpp)
    kp_over[0] = hpp[0]  # on-axis limit h'/rho -> h''
    # h_t = (k_m k_p / (k_m + k_p)) * W  with k_m = h''/W^3, k_p = kp_over/W
    num = hpp * kp_over
    den = hpp + w2 * kp_over
    den_floor = 1e-14
    den = np.where(np.abs(den) < den_floor, np.where(den < 0, -den_floor, den_floor), den)
    rhs = np.where(flat, 0.0, num / den)
    return rhs, hp, hpp, flat


def _stable_dt(profile: RadialProfile, hp, hpp, flat, dt_safety: float) -> float:
    # effective diffusivity = d(rhs)/d(h'') on the non-flat set
    w2 = 1.0 + hp * hp
    kp_over = np.where(profile.r > 0.0, hp / np.where(profile.r > 0, profile.r, 1.0), hpp)
    kp_over[0] = hpp[0]
    den = hpp + w2 * kp_over
    ok = ~flat & (np.abs(den) > 1e-14)
    if not ok.any():
        return math.inf
    a_eff = np.abs((w2 * kp_over**2)[ok] / den[ok] ** 2)
    amax = a_eff.max()
    if amax <= 0.0:
        return math.inf
    return dt_safety * profile.dr**2 / (2.0 * amax)


def radial_hmcf_step(profile: RadialProfile, dt: float) -> RadialProfile:
    """One explicit Euler step of the reduced 1D flow.

    dt must respect the 1D stability bound; the flat part of the profile is
    left untouched exactly.
    """
    rhs, hp, hpp, flat = _radial_rhs(profile)
    bound = _stable_dt(profile, hp, hpp, flat, dt_safety=1.0)
    if dt > bound:
        raise StiffnessError(f"dt = {dt:.3e} exceeds the stability bound {bound:.3e}")
    new = profile.values + dt * rhs
    return replace(profile, values=np.maximum(new, 0.0))


def radial_hmcf_run(
    profile: RadialProfile,
    t_end: float,
    dt_safety: float = 0.8,
    record_every: int = 0,
):
    """Integrate the 1D reduction to t_end with automatic step control.

    Returns (final_profile, times, snapshots); snapshots are recorded every
    ``record_every`` steps when that is positive, and always include the
    initial and final profiles.
    """
    t = 0.0
    prof = profile
    times = [0.0]
    snaps = [prof]
    step = 0
    while t < t_end:
        rhs, hp, hpp, flat = _radial_rhs(prof)
        bound = _stable_dt(prof, hp, hpp, flat, dt_safety)
        if bound <= 1e-14 * max(t_end, 1.0):
            raise StiffnessError("radial step size underflow")
        dt = min(bound, t_end - t)
        if not math.isfinite(dt):
            dt = t_end - t
        prof = replace(prof, values=np.maximum(prof.values + dt * rhs, 0.0))
        t += dt
        step += 1
        if record_every and step % record_every == 0:
            times.append(t)
            snaps.append(prof)
    if times[-1] != t:
        times.append(t)
        snaps.append(prof)
    return prof, np.array(times), snaps
