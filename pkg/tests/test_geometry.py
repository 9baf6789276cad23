import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmcflow.errors import ConvexityError, StencilError
from hmcflow.geometry import (
    CurvaturePair,
    HeightField,
    harmonic_mean_velocity,
    hessian_and_gradient,
    principal_curvatures,
)

from conftest import grid


def make_field(values, dx):
    return HeightField(dx=dx, dy=dx, origin=(0.0, 0.0), values=values)


def test_hessian_exact_on_quadratic():
    dx = 0.1
    n = 11
    xs = np.arange(n) * dx - 0.5
    X, _ = np.meshgrid(xs, xs, indexing="ij")
    f = HeightField(dx=dx, dy=dx, origin=(xs[0], xs[0]), values=X**2)
    g, H = hessian_and_gradient(f, 7, 5)
    x_here = xs[7]
    assert g[0] == pytest.approx(2.0 * x_here, abs=1e-13)
    assert g[1] == pytest.approx(0.0, abs=1e-13)
    assert np.allclose(H, [[2.0, 0.0], [0.0, 0.0]], atol=1e-12)


def test_hessian_zero_on_constant_field():
    f = make_field(np.zeros((7, 7)), 0.05)
    g, H = hessian_and_gradient(f, 3, 3)
    assert np.all(g == 0.0)
    assert np.all(H == 0.0)


def test_hessian_of_hemisphere_at_origin():
    # h = 1 - sqrt(1 - x^2 - y^2) has gradient 0 and unit Hessian at the apex
    n = 41
    xs, X, Y = grid(n, 0.2)
    vals = 1.0 - np.sqrt(1.0 - X**2 - Y**2)
    dx = xs[1] - xs[0]
    f = HeightField(dx=dx, dy=dx, origin=(xs[0], xs[0]), values=vals)
    i0 = n // 2
    g, H = hessian_and_gradient(f, i0, i0)
    assert np.allclose(g, 0.0, atol=1e-12)
    assert np.allclose(H, np.eye(2), atol=2.0 * dx**2)


def test_hessian_stencil_error_outside_interior():
    f = make_field(np.zeros((6, 6)), 0.1)
    with pytest.raises(StencilError):
        hessian_and_gradient(f, 0, 3)
    with pytest.raises(StencilError):
        hessian_and_gradient(f, 3, 5)


def test_principal_curvatures_unit_sphere_apex():
    pair = principal_curvatures([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    assert pair.lambda1 == pytest.approx(1.0)
    assert pair.lambda2 == pytest.approx(1.0)
    assert pair.K == pytest.approx(1.0)
    assert pair.H == pytest.approx(2.0)


def test_principal_curvatures_parabolic_cylinder():
    pair = principal_curvatures([0.0, 0.0], [[2.0, 0.0], [0.0, 0.0]])
    assert pair.lambda1 == pytest.approx(0.0, abs=1e-15)
    assert pair.lambda2 == pytest.approx(2.0)
    assert pair.K == pytest.approx(0.0, abs=1e-15)
    assert pair.H == pytest.approx(2.0)


def test_principal_curvatures_match_bruteforce_shape_operator():
    # oracle: eigenvalues of g^{-1} b computed by a dense eigensolver
    grad = np.array([1.0, 0.0])
    hess = np.array([[2.0, 0.0], [0.0, 2.0]])
    g = np.eye(2) + np.outer(grad, grad)
    W = np.sqrt(1.0 + grad @ grad)
    b = hess / W
    brute = np.sort(np.linalg.eigvals(np.linalg.solve(g, b)).real)
    pair = principal_curvatures(grad, hess)
    assert pair.lambda1 == pytest.approx(brute[0], rel=1e-12)
    assert pair.lambda2 == pytest.approx(brute[1], rel=1e-12)


@given(
    st.floats(-0.9, 2.5),
    st.floats(-0.9, 2.5),
    st.floats(-1.5, 1.5),
    st.floats(-1.5, 1.5),
    st.floats(-1.0, 1.0),
)
def test_principal_curvatures_bruteforce_random(hxx, hyy, hxy, gx, gy):
    grad = np.array([gx, gy])
    hess = np.array([[hxx, hxy], [hxy, hyy]])
    g = np.eye(2) + np.outer(grad, grad)
    W = np.sqrt(1.0 + grad @ grad)
    brute = np.sort(np.linalg.eigvals(np.linalg.solve(g, hess / W)).real)
    pair = principal_curvatures(grad, hess)
    scale = max(1.0, abs(brute[0]), abs(brute[1]))
    assert abs(pair.lambda1 - brute[0]) <= 1e-9 * scale
    assert abs(pair.lambda2 - brute[1]) <= 1e-9 * scale


def test_frame_invariance_under_rotation():
    # rotating gradient and Hessian leaves the principal curvatures fixed
    th = np.deg2rad(30.0)
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    rng = np.random.default_rng(7)
    for _ in range(20):
        grad = rng.uniform(-1, 1, size=2)
        m = rng.uniform(-1, 1, size=(2, 2))
        hess = m + m.T + 2.0 * np.eye(2)
        p1 = principal_curvatures(grad, hess)
        p2 = principal_curvatures(R @ grad, R @ hess @ R.T)
        assert p1.lambda1 == pytest.approx(p2.lambda1, abs=1e-6)
        assert p1.lambda2 == pytest.approx(p2.lambda2, abs=1e-6)


def test_harmonic_mean_velocity_values():
    assert harmonic_mean_velocity(CurvaturePair(1.0, 1.0)) == pytest.approx(0.5)
    assert harmonic_mean_velocity(CurvaturePair(0.0, 2.0)) == 0.0
    assert harmonic_mean_velocity(CurvaturePair(0.5, 0.5)) == pytest.approx(0.25)
    assert harmonic_mean_velocity(CurvaturePair(0.0, 0.0)) == 0.0


def test_harmonic_mean_velocity_convexity_error():
    with pytest.raises(ConvexityError):
        harmonic_mean_velocity(CurvaturePair(-1e-3, 1.0))
    # tiny negatives within tolerance are clamped, not fatal
    assert harmonic_mean_velocity(CurvaturePair(-1e-9, 1.0)) == 0.0


@given(st.floats(1e-6, 10.0), st.floats(1e-6, 10.0))
def test_harmonic_mean_sandwich(l1, l2):
    v = harmonic_mean_velocity(CurvaturePair(l1, l2))
    lmin = min(l1, l2)
    # one-ulp slack: at l1 == l2 the quotient rounds to lmin/2 from below
    assert 0.5 * lmin * (1.0 - 1e-12) <= v <= lmin * (1.0 + 1e-12)


@given(st.floats(1e-6, 10.0), st.floats(1e-6, 10.0), st.floats(0.1, 10.0))
def test_harmonic_mean_symmetry_and_homogeneity(l1, l2, c):
    v12 = harmonic_mean_velocity(CurvaturePair(l1, l2))
    v21 = harmonic_mean_velocity(CurvaturePair(l2, l1))
    assert v12 == pytest.approx(v21, rel=1e-12)
    vc = harmonic_mean_velocity(CurvaturePair(c * l1, c * l2))
    assert vc == pytest.approx(c * v12, rel=1e-12)


def test_height_field_validation():
    with pytest.raises(ValueError):
        HeightField(dx=0.1, dy=0.1, origin=(0, 0), values=np.zeros((3, 3))).validate()
    f = HeightField(dx=0.1, dy=0.1, origin=(0, 0), values=-np.ones((6, 6)))
    with pytest.raises(ValueError):
        f.validate()
    f.validate(require_nonnegative=False)  # comparison barriers may dip below


def test_flat_mask_on_plateau_field():
    vals = np.zeros((12, 12))
    vals[8:, :] = 1.0  # a ramp far from the plateau
    f = HeightField(dx=0.1, dy=0.1, origin=(0, 0), values=vals, flat_tol=1e-9)
    mask = f.flat_mask()
    assert mask[2, 2]
    assert not mask[8, 2]
    # the strictly convex sphere cap touching z = 0 at one node is NOT flat
    xs = np.linspace(-0.2, 0.2, 12)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    sphere = HeightField(
        dx=xs[1] - xs[0],
        dy=xs[1] - xs[0],
        origin=(xs[0], xs[0]),
        values=1.0 - np.sqrt(1.0 - X**2 - Y**2),
        flat_tol=1e-9,
    )
    assert not sphere.flat_mask().any()
