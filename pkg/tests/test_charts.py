import math

import numpy as np
import pytest

from hmcflow.charts import (
    StructureReport,
    derived_w_time_derivative,
    errata_report,
    evaluate_chart,
    finite_difference_surface_jet,
    identity_chart,
    linearization_structure_report,
    polynomial_chart,
    printed_second_derivatives,
    random_polynomial_chart,
    second_derivative_coefficients,
    second_derivative_expansion,
    second_derivatives_of_inverse,
    w_time_derivative,
)
from hmcflow.errors import SingularChartError, TransversalityError


def sympy_chart(S_exprs, T_exprs):
    """Chart with closed-form components; derivatives coded by lambdify."""
    import sympy as sp

    u, v = sp.symbols("u v", real=True)

    def tables(exprs):
        vec = sp.Matrix([sp.sympify(e, locals={"u": u, "v": v}) for e in exprs])
        out = {}
        out[""] = sp.lambdify((u, v), vec, "numpy")
        for name, d in (
            ("_u", (u,)),
            ("_v", (v,)),
            ("_uu", (u, u)),
            ("_uv", (u, v)),
            ("_vv", (v, v)),
        ):
            out[name] = sp.lambdify((u, v), vec.diff(*d), "numpy")
        return out

    ts, tt = tables(S_exprs), tables(T_exprs)

    def wrap(f):
        return lambda uu, vv: np.asarray(f(uu, vv), dtype=float).ravel()

    from hmcflow.charts import ChartMap

    return ChartMap(
        S=wrap(ts[""]), T=wrap(tt[""]),
        S_u=wrap(ts["_u"]), S_v=wrap(ts["_v"]),
        S_uu=wrap(ts["_uu"]), S_uv=wrap(ts["_uv"]), S_vv=wrap(ts["_vv"]),
        T_u=wrap(tt["_u"]), T_v=wrap(tt["_v"]),
        T_uu=wrap(tt["_uu"]), T_uv=wrap(tt["_uv"]), T_vv=wrap(tt["_vv"]),
    )


# --- evaluate_chart -----------------------------------------------------------


def test_identity_chart_frame():
    frame = evaluate_chart(identity_chart(), 0.3, -0.2, 0.1)
    assert np.allclose(frame.point, [0.3, -0.2, 0.1])
    assert np.allclose(frame.A, np.eye(2))
    assert np.allclose(frame.B1, 0.0)
    assert np.allclose(frame.B2, 0.0)


def test_linear_rescaling_chart():
    chart = polynomial_chart(
        ([[0, 0], [2, 0]], [[0, 1], [0, 0]], [[0]]),  # S = (2u, v, 0)
        ([[0]], [[0]], [[1]]),
    )
    frame = evaluate_chart(chart, 0.2, 0.1, 0.0)
    assert np.allclose(frame.A, [[0.5, 0.0], [0.0, 1.0]])


def test_chart_inverse_identity_and_fd_jacobian(rng):
    chart = random_polynomial_chart(rng, amplitude=0.1)
    u, v, w = 0.25, -0.15, 0.05
    frame = evaluate_chart(chart, u, v, w)
    assert np.allclose(frame.A @ frame.A_inv, np.eye(2), atol=1e-12)
    # FD of the forward map at fixed offset reproduces A_inv
    eps = 1e-6
    cols = []
    for du, dv in ((eps, 0.0), (0.0, eps)):
        plus = chart.point(u + du, v + dv, w)
        minus = chart.point(u - du, v - dv, w)
        cols.append((plus[:2] - minus[:2]) / (2 * eps))
    fd = np.column_stack(cols)
    assert np.allclose(fd, frame.A_inv, atol=1e-6)


def test_b_matrices_match_fd_of_inverse_jacobian(rng):
    chart = random_polynomial_chart(rng, amplitude=0.1)
    u, v, w = 0.1, 0.2, 0.03
    frame = evaluate_chart(chart, u, v, w)
    s = 1e-6
    # (a, b, c, d) = (u_x, v_x, u_y, v_y): transposed reading of A
    a, b = frame.A[0, 0], frame.A[1, 0]
    c, d = frame.A[0, 1], frame.A[1, 1]
    # d/dx = a d/du + b d/dv and d/dy = c d/du + d d/dv at fixed offset;
    # B1/B2 are those derivatives applied to A_inv^T
    for B, (pu, pv) in ((frame.B1, (a, b)), (frame.B2, (c, d))):
        plus = evaluate_chart(chart, u + s * pu, v + s * pv, w).A_inv.T
        minus = evaluate_chart(chart, u - s * pu, v - s * pv, w).A_inv.T
        fd = (plus - minus) / (2 * s)
        assert np.allclose(fd, B, atol=1e-5)


def test_singular_chart_rejected():
    chart = polynomial_chart(
        ([[0, 0], [1, 0]], [[0, 0], [1, 0]], [[0]]),  # x = y = u: singular
        ([[0]], [[0]], [[1]]),
    )
    with pytest.raises(SingularChartError):
        evaluate_chart(chart, 0.1, 0.1, 0.0)


def test_d2_inverse_assembly_consistency(rng):
    # mixed entries from the B1 and B2 assembly routes must agree
    chart = random_polynomial_chart(rng, amplitude=0.05)
    D2u, D2v, raw = second_derivatives_of_inverse(chart, 0.2, -0.1, 0.02)
    assert raw["c1"] == pytest.approx(raw["a2"], abs=1e-10)
    assert raw["d1"] == pytest.approx(raw["b2"], abs=1e-10)


def test_d2_inverse_matches_fd(rng):
    chart = random_polynomial_chart(rng, amplitude=0.08)
    u0, v0, w0 = 0.15, 0.1, 0.0
    D2u, D2v, _ = second_derivatives_of_inverse(chart, u0, v0, w0)
    p0 = chart.point(u0, v0, w0)

    def solve_uv(x, y):
        uu, vv = u0, v0
        for _ in range(50):
            cur = chart.point(uu, vv, w0)
            rx, ry = cur[0] - x, cur[1] - y
            if abs(rx) < 1e-14 and abs(ry) < 1e-14:
                break
            frame = evaluate_chart(chart, uu, vv, w0)
            du, dv = frame.A @ np.array([rx, ry])  # A = d(u,v)/d(x,y)
            uu -= du
            vv -= dv
        return uu, vv

    h = 1e-4
    x0, y0 = p0[0], p0[1]
    u_of = lambda x, y: solve_uv(x, y)[0]
    uxx = (u_of(x0 + h, y0) - 2 * u_of(x0, y0) + u_of(x0 - h, y0)) / h**2
    uyy = (u_of(x0, y0 + h) - 2 * u_of(x0, y0) + u_of(x0, y0 - h)) / h**2
    uxy = (
        u_of(x0 + h, y0 + h) - u_of(x0 + h, y0 - h)
        - u_of(x0 - h, y0 + h) + u_of(x0 - h, y0 - h)
    ) / (4 * h**2)
    assert D2u[0, 0] == pytest.approx(uxx, abs=1e-5)
    assert D2u[1, 1] == pytest.approx(uyy, abs=1e-5)
    assert D2u[0, 1] == pytest.approx(uxy, abs=1e-5)


# --- second derivative expansion ------------------------------------------------


def test_expansion_identity_chart_quadratic():
    # w(u, v) = u^2 through the identity chart: z = x^2
    vals = second_derivative_expansion(identity_chart(), 0.0, 0.0, (0.0, 0, 0, 2.0, 0, 0))
    assert vals == pytest.approx((2.0, 0.0, 0.0))


def test_expansion_flat_offset_of_plane():
    # constant offset of a flat horizontal plane stays a plane
    chart = polynomial_chart(
        ([[0, 0], [1, 0]], [[0, 1], [0, 0]], [[0]]),
        ([[0]], [[0]], [[1]]),
    )
    vals = second_derivative_expansion(chart, 0.3, 0.2, (0.25, 0, 0, 0, 0, 0))
    assert vals == pytest.approx((0.0, 0.0, 0.0), abs=1e-14)


def test_expansion_matches_fd_oracle_random(rng):
    # the module's core validation: exact route vs finite differences of the
    # composed, numerically inverted map
    for _ in range(10):
        chart = random_polynomial_chart(rng, amplitude=0.08)
        u0, v0 = rng.uniform(-0.3, 0.3, size=2)
        jet = (
            rng.uniform(-0.05, 0.05),
            *rng.uniform(-0.2, 0.2, size=2),
            *rng.uniform(-0.5, 0.5, size=3),
        )

        def w_field(uu, vv, jet=jet, u0=u0, v0=v0):
            du, dv = uu - u0, vv - v0
            w0, w1, w2, w11, w12, w22 = jet
            return (
                w0 + w1 * du + w2 * dv
                + 0.5 * (w11 * du * du + 2 * w12 * du * dv + w22 * dv * dv)
            )

        exact = second_derivative_expansion(chart, u0, v0, jet)
        _, hess = finite_difference_surface_jet(chart, u0, v0, w_field, h=1e-3)
        fd = (hess[0, 0], hess[1, 1], hess[0, 1])
        for e, f in zip(exact, fd):
            assert abs(e - f) <= 1e-6 * max(1.0, abs(e))


def test_expansion_linear_in_second_jet(rng):
    # the closed form is linear in (w11, w12, w22): verify by superposition
    chart = random_polynomial_chart(rng, amplitude=0.1)
    u0, v0 = 0.1, -0.2
    base = (0.02, 0.1, -0.1, 0.0, 0.0, 0.0)
    f0 = np.array(second_derivative_expansion(chart, u0, v0, base))
    out = {}
    for k, name in ((3, "w11"), (4, "w12"), (5, "w22")):
        jet = list(base)
        jet[k] = 1.0
        out[name] = np.array(second_derivative_expansion(chart, u0, v0, jet)) - f0
    jet = list(base)
    jet[3], jet[4], jet[5] = 0.3, -0.4, 0.7
    combined = np.array(second_derivative_expansion(chart, u0, v0, jet))
    linear = f0 + 0.3 * out["w11"] - 0.4 * out["w12"] + 0.7 * out["w22"]
    assert np.allclose(combined, linear, atol=1e-12)


def test_chain_rule_fd_convergence_order(rng):
    # measured FD convergence toward the exact values has order ~2
    chart = random_polynomial_chart(rng, amplitude=0.08)
    u0, v0 = 0.2, 0.1
    jet = (0.01, 0.15, -0.1, 0.4, -0.2, 0.3)

    def w_field(uu, vv):
        du, dv = uu - u0, vv - v0
        return (
            jet[0] + jet[1] * du + jet[2] * dv
            + 0.5 * (jet[3] * du**2 + 2 * jet[4] * du * dv + jet[5] * dv**2)
        )

    exact = np.array(second_derivative_expansion(chart, u0, v0, jet))
    errs = []
    for h in (1e-2, 1e-3):
        _, hess = finite_difference_surface_jet(chart, u0, v0, w_field, h=h)
        fd = np.array([hess[0, 0], hess[1, 1], hess[0, 1]])
        errs.append(np.abs(fd - exact).max())
    order = math.log10(errs[0] / max(errs[1], 1e-16))
    assert order >= 1.9


# --- published lists ------------------------------------------------------------


def test_printed_assembly_on_identity_chart():
    jet = (0.0, 0, 0, 2.0, 1.0, 0.5)
    printed = printed_second_derivatives(identity_chart(), 0.1, -0.1, jet)
    exact = second_derivative_expansion(identity_chart(), 0.1, -0.1, jet)
    # the pure-direction targets agree even as printed...
    assert printed[0] == pytest.approx(exact[0], abs=1e-12)  # z_xx
    assert printed[1] == pytest.approx(exact[1], abs=1e-12)  # z_yy
    # ...but the mixed-target list is erroneous already on the identity
    # chart: its printed A12 coefficient (a duplicate of the printed B11)
    # cannot produce the w12 dependence of z_xy = w12
    assert exact[2] == pytest.approx(1.0)
    assert printed[2] == pytest.approx(0.0, abs=1e-12)
    lists = second_derivative_coefficients(identity_chart(), 0.1, -0.1, jet)
    assert lists[2].A12 == lists[2].B11  # the duplicated entry, as printed


def test_printed_coefficients_quadratic_terms_vanish_on_vertical_family(rng):
    chart = random_polynomial_chart(rng, amplitude=0.08, vertical=True)
    lists = second_derivative_coefficients(chart, 0.1, 0.2, (0.02, 0.1, -0.1, 0, 0, 0))
    for lst in lists:
        assert lst.B11 == pytest.approx(0.0, abs=1e-12)
        assert lst.B12 == pytest.approx(0.0, abs=1e-12)
        assert lst.B22 == pytest.approx(0.0, abs=1e-12)


def test_errata_report_structure_and_adjudication():
    report = errata_report(seed=1, n_general=6, n_vertical=6)
    assert report["summary"]["samples_general"] == 6
    assert report["summary"]["samples_vertical"] == 6
    # the offset-velocity sign discrepancy is always recorded
    kinds = {e["kind"] for e in report["entries"]}
    assert "velocity_formula" in kinds
    for e in report["entries"]:
        assert {"kind", "coefficient", "printed_value", "oracle_value", "discrepancy"} <= set(e)


# --- offset velocity -------------------------------------------------------------


def test_w_time_derivative_published_values():
    assert w_time_derivative(z_t=2.0, z_y=0.0, y_w=3.0, z_w=1.0) == pytest.approx(-2.0)
    assert w_time_derivative(z_t=0.0, z_y=1.0, y_w=2.0, z_w=0.5) == 0.0
    with pytest.raises(TransversalityError):
        w_time_derivative(z_t=1.0, z_y=1.0, y_w=1.0, z_w=1.0)


def test_w_time_derivative_sign_adjudication():
    # vertical unit transverse field: w = z - S3, so w_t must equal z_t; the
    # chain-rule form delivers that, the published one is its negative
    z_t = 0.7
    derived = derived_w_time_derivative(z_t, z_x=0.0, z_y=0.0, x_w=0.0, y_w=0.0, z_w=1.0)
    published = w_time_derivative(z_t, z_y=0.0, y_w=0.0, z_w=1.0)
    assert derived == pytest.approx(z_t)
    assert published == pytest.approx(-z_t)


def test_w_time_derivative_consistency_with_time_fd():
    # shrinking sphere seen through a vertical chart: w(t) = R0 - sqrt(R(t)^2 - rho^2)
    # and the chain-rule velocity must reproduce its finite-difference rate
    R0, rho = 1.0, 0.3
    t0, dt = 0.02, 1e-7

    def R(t):
        return math.sqrt(R0 * R0 - t)

    def w_of(t):
        return R0 - math.sqrt(R(t) ** 2 - rho * rho)

    # z = h(x, y, t), vertical chart S3 = R0 (w = z - R0 shifted): z_t at
    # fixed (x, y) from the closed-form sphere graph
    z_t = (w_of(t0 + dt) - w_of(t0 - dt)) / (2 * dt)
    vel = derived_w_time_derivative(z_t, z_x=0.4, z_y=0.0, x_w=0.0, y_w=0.0, z_w=1.0)
    fd = (w_of(t0 + dt) - w_of(t0 - dt)) / (2 * dt)
    assert vel == pytest.approx(fd, rel=1e-9)
    assert w_time_derivative(z_t, z_y=0.0, y_w=0.0, z_w=1.0) == pytest.approx(-fd, rel=1e-9)


# --- linearization structure ------------------------------------------------------


def rotational_chart(r0=0.5, R_out=1.2, profile="flat"):
    """Surface of revolution over the disk: the boundary ring maps to the
    interface circle rho = r0; 'flat' uses h = (rho - r0)^2, 'sphere' a cap."""
    rr = "sqrt(u**2 + v**2)"
    rho = f"({r0} + ({R_out} - {r0})*(1 - ({rr})**2))"
    if profile == "flat":
        h = f"({rho} - {r0})**2"
    else:
        h = f"2.0 - sqrt(4.0 - ({rho})**2)"
    S = (f"{rho}*u/({rr})", f"{rho}*v/({rr})", h)
    T = ("0", "0", "1")
    return sympy_chart(S, T)


def test_structure_report_flat_sided_degeneracy():
    chart = rotational_chart(profile="flat")
    ray = [(u, 0.0) for u in np.linspace(0.3, 0.98, 12)]
    rep = linearization_structure_report(chart, lambda u, v: (0, 0, 0, 0, 0, 0), ray)
    assert isinstance(rep, StructureReport)
    # normal-normal coefficient (u-direction at v = 0) collapses toward the
    # interface ring; the tangential one stays bounded below
    assert rep.decay_ratio("w11") < 0.05
    m22 = np.abs(rep.sensitivities["w22"])
    assert m22.min() > 0.1 * m22.max()
    assert not rep.zero_velocity


def test_structure_report_sphere_uniformly_parabolic():
    # a shrinking sphere of radius 2 has linearized diffusivity 1/4 in every
    # direction at every point: bounded above and below, no degeneracy
    chart = rotational_chart(profile="sphere")
    ray = [(u, 0.0) for u in np.linspace(0.3, 0.95, 10)]
    rep = linearization_structure_report(chart, lambda u, v: (0, 0, 0, 0, 0, 0), ray)
    for name in ("w11", "w22"):
        arr = np.abs(rep.sensitivities[name])
        assert np.allclose(arr, 0.25, atol=1e-4)
    assert not rep.zero_velocity


def test_structure_report_zero_velocity_flag():
    plane = polynomial_chart(
        ([[0, 0], [1, 0]], [[0, 1], [0, 0]], [[1]]),  # z = 1 plane
        ([[0]], [[0]], [[1]]),
    )
    ray = [(u, 0.0) for u in np.linspace(-0.4, 0.4, 5)]
    rep = linearization_structure_report(plane, lambda u, v: (0, 0, 0, 0, 0, 0), ray)
    assert rep.zero_velocity
