import math

import numpy as np
import pytest

from hmcflow.errors import StiffnessError
from hmcflow.oracle import (
    ExtinctError,
    RadialProfile,
    circle_csf_radius,
    radial_hmcf_run,
    radial_hmcf_step,
    sphere_radius,
)


def test_sphere_radius_values():
    assert sphere_radius(1.0, 0.0) == 1.0
    assert sphere_radius(1.0, 0.5) == pytest.approx(math.sqrt(0.5))
    assert sphere_radius(2.0, 3.0) == pytest.approx(1.0)
    with pytest.raises(ExtinctError):
        sphere_radius(1.0, 1.0)


def test_circle_csf_radius_values():
    assert circle_csf_radius(1.0, 0.0) == 1.0
    assert circle_csf_radius(1.0, 0.25) == pytest.approx(math.sqrt(0.5))
    assert circle_csf_radius(0.5, 0.1) == pytest.approx(math.sqrt(0.05))
    with pytest.raises(ExtinctError):
        circle_csf_radius(1.0, 0.5)


def hemisphere_profile(n=801, rmax=0.8, R=1.0):
    r = np.linspace(0.0, rmax, n)
    return RadialProfile(r=r, values=R - np.sqrt(R * R - r * r))


def flat_disk_profile(n=1001, rmax=1.5, r0=0.5):
    r = np.linspace(0.0, rmax, n)
    return RadialProfile(r=r, values=np.maximum(r - r0, 0.0) ** 2)


def test_radial_step_apex_rate_matches_sphere():
    prof = hemisphere_profile()
    dt = 0.2 * prof.dr**2
    stepped = radial_hmcf_step(prof, dt)
    rate = (stepped.values[0] - prof.values[0]) / dt
    assert rate == pytest.approx(0.5, abs=5e-3)


def test_radial_step_flat_profile_unchanged():
    r = np.linspace(0.0, 1.0, 101)
    prof = RadialProfile(r=r, values=np.zeros_like(r))
    stepped = radial_hmcf_step(prof, 1e-4)
    assert np.array_equal(stepped.values, prof.values)


def test_radial_step_cfl_guard():
    prof = hemisphere_profile(n=101)
    with pytest.raises(StiffnessError):
        radial_hmcf_step(prof, 1.0)


def level_crossing_radius(profile, level):
    """First radius where the profile crosses the level (linear interp)."""
    i = np.nonzero(profile.values > level)[0][0]
    return float(np.interp(level, profile.values[i - 1 : i + 1], profile.r[i - 1 : i + 1]))


def flat_radius_estimate(profile):
    """Two-level extrapolation cancelling the quadratic profile offset.

    The profile leaves its flat set like c*(rho - r)^2, so the level-L
    crossing sits at r + sqrt(L/c); sampling two levels with sqrt ratio 2
    and extrapolating removes the offset without knowing c.
    """
    dr = profile.dr
    r1 = level_crossing_radius(profile, (2.0 * dr) ** 2)
    r2 = level_crossing_radius(profile, (4.0 * dr) ** 2)
    return 2.0 * r1 - r2


def test_flat_radius_tracks_circle_law():
    prof = flat_disk_profile()
    final, times, _ = radial_hmcf_run(prof, t_end=0.02)
    r_exact = circle_csf_radius(0.5, 0.02)
    assert abs(flat_radius_estimate(final) - r_exact) / r_exact < 0.02


def test_richardson_consistency_order():
    # halving dr (and the internal dt bound with it) must shrink the change
    # like a scheme of order >= 1.8 in dr
    t_end = 5e-3
    results = {}
    for n in (401, 801, 1601):
        prof = hemisphere_profile(n=n, rmax=0.8)
        final, _, _ = radial_hmcf_run(prof, t_end=t_end, dt_safety=0.2)
        results[n] = np.interp(0.4, final.r, final.values)
    e_coarse = abs(results[401] - results[1601])
    e_fine = abs(results[801] - results[1601])
    order = math.log2(e_coarse / e_fine)
    assert order > 1.8


def test_run_records_snapshots():
    prof = hemisphere_profile(n=201)
    final, times, snaps = radial_hmcf_run(prof, t_end=1e-3, record_every=5)
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(1e-3)
    assert len(times) == len(snaps)
    assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))
