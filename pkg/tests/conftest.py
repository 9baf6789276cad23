"""Shared field and curve builders for the test suite."""

import numpy as np
import pytest

from hmcflow.geometry import HeightField
from hmcflow.interface import Curve


def grid(n, half):
    xs = np.linspace(-half, half, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return xs, X, Y


def sphere_field(n=65, half=0.6, R=1.0, center_z=None, flat_tol=1e-9):
    """Lower cap of a sphere of radius R with center height center_z."""
    cz = R if center_z is None else center_z
    xs, X, Y = grid(n, half)
    rho2 = X**2 + Y**2
    assert rho2.max() < R * R, "domain too large for the sphere cap"
    vals = cz - np.sqrt(R * R - rho2)
    dx = xs[1] - xs[0]
    return HeightField(dx=dx, dy=dx, origin=(xs[0], xs[0]), values=vals, flat_tol=flat_tol)


def flat_disk_field(n=129, half=1.0, r0=0.5, flat_tol=1e-9):
    """Quadratic bowl with a flat disk of radius r0: h = ((rho - r0)_+)^2."""
    xs, X, Y = grid(n, half)
    rho = np.hypot(X, Y)
    vals = np.maximum(rho - r0, 0.0) ** 2
    dx = xs[1] - xs[0]
    return HeightField(dx=dx, dy=dx, origin=(xs[0], xs[0]), values=vals, flat_tol=flat_tol)


def paraboloid_field(n=65, half=0.5, a=1.0, lift=1e-3):
    xs, X, Y = grid(n, half)
    vals = 0.5 * a * (X**2 + Y**2) + lift
    dx = xs[1] - xs[0]
    return HeightField(dx=dx, dy=dx, origin=(xs[0], xs[0]), values=vals, flat_tol=1e-12)


def circle_curve(r=1.0, n=64, center=(0.0, 0.0)):
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    pts = np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])
    return Curve(points=pts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
