"""Time evolution of a height field under the degenerate graph equation.

The lower graph of a weakly convex body moving with inward normal speed K/H
satisfies

    h_t = (h_xx h_yy - h_xy^2) / ((1+h_y^2) h_xx - 2 h_x h_y h_xy + (1+h_x^2) h_yy)

on the strictly convex part; the numerator is the Hessian determinant (K up
to metric factors) and the quotient vanishes identically on the flat side.
The orientation is fixed so the lower graph rises as the body shrinks,
which the shrinking-sphere oracle pins down unambiguously.

Explicit time stepping with a frozen-coefficient CFL bound; the equation is
degenerate (diffusivity -> 0) at the flat side, so the stability bound is
controlled by the strictly convex set.  All sweeps are vectorized and
deterministic: identical inputs give bitwise identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    ConvexityError,
    DegeneracyError,
    GridMismatchError,
    StencilError,
    StiffnessError,
)
from .geometry import HeightField, derivative_fields

__all__ = [
    "FlowConfig",
    "FlowState",
    "RunResult",
    "rhs_graph",
    "step",
    "run",
    "containment_check",
]


@dataclass(frozen=True)
class FlowConfig:
    """Knobs of the explicit integrator.

    denom_eps = None resolves to 1e-10/dx at run time.  dt_fixed forces a
    constant step (used to co-evolve nested bodies on a shared time axis);
    the stability bound is still enforced.
    """

    dt_safety: float = 0.9
    t_end: float = 0.1
    denom_eps: float | None = None
    record_every: int = 100
    p: float = 0.5
    method: str = "euler"  # "euler" | "rk2"
    dt_fixed: float | None = None
    require_nonnegative: bool = True
    clamp_tol: float | None = None  # None -> 1e-8/dx

    def validate(self) -> None:
        if not (0.0 < self.dt_safety <= 1.0):
            raise ValueError("dt_safety must be in (0, 1]")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if self.denom_eps is not None and self.denom_eps <= 0.0:
            raise ValueError("denom_eps must be positive")
        if not (0.0 < self.p < 1.0):
            raise ValueError("pressure exponent p must satisfy 0 < p < 1")
        if self.method not in ("euler", "rk2"):
            raise ValueError("method must be 'euler' or 'rk2'")


@dataclass(frozen=True)
class FlowState:
    field: HeightField
    t: float = 0.0
    step_count: int = 0
    min_denominator: float = math.inf


@dataclass(frozen=True)
class RunResult:
    """Trajectory of recorded states plus the reason the run ended."""

    snapshots: tuple
    failure: str | None = None

    @property
    def completed(self) -> bool:
        return self.failure is None

    @property
    def final(self) -> FlowState:
        return self.snapshots[-1]


def _quotient_pieces(field: HeightField):
    """Numerator/denominator of the graph quotient plus derivative arrays."""
    hx, hy, hxx, hxy, hyy = derivative_fields(field.values, field.dx, field.dy)
    num = hxx * hyy - hxy * hxy
    den = (1.0 + hy * hy) * hxx - 2.0 * hx * hy * hxy + (1.0 + hx * hx) * hyy
    ft = field.flat_tol
    flat = (
        (np.abs(field.values) < ft)
        & (np.abs(hx) * field.dx < ft)
        & (np.abs(hy) * field.dy < ft)
        & (np.abs(hxx) * field.dx**2 < ft)
        & (np.abs(hyy) * field.dy**2 < ft)
        & (np.abs(hxy) * field.dx * field.dy < ft)
    )
    return num, den, flat, (hx, hy, hxx, hxy, hyy)


def _rhs_field(field: HeightField, denom_eps: float, clamp_tol: float):
    """Vectorized right-hand side with degeneracy handling.

    Returns (rhs, min_abs_denominator_on_nonflat, derivative arrays).
    """
    num, den, flat, deriv = _quotient_pieces(field)
    hx, hy, _, _, _ = deriv

    # Stencils that straddle the free boundary see the C^{1,1} kink of the
    # profile and produce O(1) negative discrete determinants there even
    # though the surface is weakly convex; on that ring the true speed is 0,
    # so negative numerators are clamped without tripping the convexity
    # guard.  The guard stays armed on resolved nodes.
    near_flat = ndimage.binary_dilation(
        field.values < field.flat_tol, iterations=2
    )

    neg = (num < 0.0) & ~flat & ~near_flat
    if neg.any():
        # smaller shape-operator eigenvalue on the offending nodes only
        w2 = 1.0 + hx[neg] ** 2 + hy[neg] ** 2
        K = num[neg] / w2**2
        H = den[neg] / w2**1.5
        lam1 = 0.5 * (H - np.sqrt(np.maximum(H * H - 4.0 * K, 0.0)))
        if (lam1 < -clamp_tol).any():
            worst = float(lam1.min())
            raise ConvexityError(
                f"lambda1 = {worst:.3e} below -clamp_tol = {-clamp_tol:.3e}"
            )
    num = np.maximum(num, 0.0)  # weak-convexity projection of the numerator

    nonflat = ~flat
    bad = nonflat & (np.abs(den) < denom_eps) & (num > denom_eps)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DegeneracyError(
            f"denominator vanished with numerator {num[i, j]:.3e} at node ({i}, {j})"
        )

    resolved = nonflat & ~near_flat
    min_den = float(np.abs(den[resolved]).min()) if resolved.any() else math.inf
    den_floored = np.where(
        np.abs(den) < denom_eps, np.where(den < 0.0, -denom_eps, denom_eps), den
    )
    rhs = np.where(flat, 0.0, num / den_floored)
    return rhs, min_den, deriv, flat | near_flat, num, den_floored


def _effective_diffusivity(num, den, deriv, excluded):
    """Largest |eigenvalue| of the quotient's derivative w.r.t. the Hessian.

    Evaluated on the resolved strictly convex set only (the degenerate flat
    set and the kink transition ring are excluded: the equation carries no
    stiffness there).
    """
    hx, hy, hxx, hxy, hyy = deriv
    den2 = den * den
    a11 = (hyy * den - num * (1.0 + hy * hy)) / den2
    a22 = (hxx * den - num * (1.0 + hx * hx)) / den2
    a12 = (-hxy * den + num * hx * hy) / den2
    half_tr = 0.5 * (a11 + a22)
    rad = np.sqrt(0.25 * (a11 - a22) ** 2 + a12 * a12)
    spectral = np.maximum(np.abs(half_tr + rad), np.abs(half_tr - rad))
    spectral = np.where(excluded, 0.0, spectral)
    return float(spectral.max())


def _resolve_eps(field: HeightField, cfg: FlowConfig):
    denom_eps = cfg.denom_eps if cfg.denom_eps is not None else 1e-10 / field.dx
    clamp_tol = cfg.clamp_tol if cfg.clamp_tol is not None else 1e-8 / field.dx
    return denom_eps, clamp_tol


def rhs_graph(field: HeightField, i: int, j: int, denom_eps: float | None = None) -> float:
    """Graph velocity h_t at node (i, j).

    Exactly zero on flat nodes; the denominator magnitude is floored at
    denom_eps (default 1e-10/dx) with its sign preserved, but only after the
    flat shortcut, so the strictly convex region is untouched.
    """
    if not (0 <= i < field.nx and 0 <= j < field.ny):
        raise StencilError(f"node ({i}, {j}) outside a {field.nx}x{field.ny} grid")
    eps = denom_eps if denom_eps is not None else 1e-10 / field.dx
    clamp = 1e-8 / field.dx
    rhs, _, _, _, _, _ = _rhs_field(field, eps, clamp)
    return float(rhs[i, j])


def stable_dt(field: HeightField, cfg: FlowConfig) -> float:
    """Frozen-coefficient CFL bound dt <= safety*min(dx^2,dy^2)/(4*diffusivity)."""
    denom_eps, clamp_tol = _resolve_eps(field, cfg)
    _, _, deriv, excluded, num, den = _rhs_field(field, denom_eps, clamp_tol)
    if (~excluded).sum() == 0:
        return math.inf
    lam = _effective_diffusivity(num, den, deriv, excluded)
    if lam <= 0.0:
        return math.inf
    return cfg.dt_safety * min(field.dx**2, field.dy**2) / (4.0 * lam)


def step(state: FlowState, cfg: FlowConfig) -> FlowState:
    """One explicit update (forward Euler by default, RK2 on request).

    Flat nodes receive an exactly zero increment.  dt is the frozen-
    coefficient stability bound unless cfg.dt_fixed is set, in which case
    the fixed step is validated against the bound.
    """
    cfg.validate()
    field = state.field
    denom_eps, clamp_tol = _resolve_eps(field, cfg)
    rhs, min_den, deriv, excluded, num, den = _rhs_field(field, denom_eps, clamp_tol)

    remaining = cfg.t_end - state.t
    if remaining <= 0.0:
        return state

    if not np.any(rhs):
        dt = remaining  # fully stationary state: jump to the end
    else:
        lam = _effective_diffusivity(num, den, deriv, excluded)
        if lam <= 0.0:
            dt = remaining
        else:
            dt = cfg.dt_safety * min(field.dx**2, field.dy**2) / (4.0 * lam)
            if dt < 1e-14 * cfg.t_end:
                raise StiffnessError(f"step size underflow: dt = {dt:.3e}")
        if cfg.dt_fixed is not None:
            if cfg.dt_fixed > dt / cfg.dt_safety:
                raise StiffnessError(
                    f"dt_fixed = {cfg.dt_fixed:.3e} exceeds stability bound {dt:.3e}"
                )
            dt = cfg.dt_fixed
        dt = min(dt, remaining)

    if cfg.method == "rk2":
        mid_vals = field.values + 0.5 * dt * rhs
        mid = field.with_values(
            np.maximum(mid_vals, 0.0) if cfg.require_nonnegative else mid_vals
        )
        rhs_mid, min_den2, _, _, _, _ = _rhs_field(mid, denom_eps, clamp_tol)
        new_vals = field.values + dt * rhs_mid
        min_den = min(min_den, min_den2)
    else:
        new_vals = field.values + dt * rhs

    if cfg.require_nonnegative:
        new_vals = np.maximum(new_vals, 0.0)

    return FlowState(
        field=field.with_values(new_vals),
        t=state.t + dt,
        step_count=state.step_count + 1,
        min_denominator=min_den,
    )


def _flat_component_count(field: HeightField) -> int:
    mask = field.values < field.flat_tol
    _, n = ndimage.label(mask)
    return int(n)


def run(initial: HeightField, cfg: FlowConfig) -> RunResult:
    """Evolve to cfg.t_end, recording a snapshot every record_every steps.

    The initial field must satisfy the height-field invariants; when it has
    a flat side the non-degeneracy of the pressure transform along the
    interface is checked as a precondition.  Any step error aborts the run
    and returns the partial trajectory together with the failure reason.
    """
    cfg.validate()
    initial.validate(require_nonnegative=cfg.require_nonnegative)
    _check_star_precondition(initial, cfg)

    state = FlowState(field=initial)
    snapshots = [state]
    components = _flat_component_count(initial)

    try:
        while state.t < cfg.t_end:
            state = step(state, cfg)
            if cfg.record_every > 0 and state.step_count % cfg.record_every == 0:
                n_comp = _flat_component_count(state.field)
                if n_comp > components:
                    raise DegeneracyError(
                        f"flat set split: {components} -> {n_comp} components"
                    )
                components = n_comp
                snapshots.append(state)
    except (ConvexityError, DegeneracyError, StiffnessError) as exc:
        if snapshots[-1] is not state:
            snapshots.append(state)
        return RunResult(snapshots=tuple(snapshots), failure=f"{type(exc).__name__}: {exc}")

    if snapshots[-1] is not state:
        snapshots.append(state)
    return RunResult(snapshots=tuple(snapshots))


def _check_star_precondition(initial: HeightField, cfg: FlowConfig) -> None:
    """Require (min |Dg|, min g_tt) > 0 along the interface when one exists.

    Precondition violations raise (unlike runtime step failures, which end
    the run with a partial trajectory); a multi-component or open interface
    propagates as an InterfaceError from the extraction.
    """
    from . import analysis, interface  # local import: avoids a cycle at import time

    curve = interface.extract_interface(initial, level=initial.flat_tol)
    if curve is None:
        return
    g = analysis.pressure(initial, cfg.p)
    report = analysis.check_star(g, curve, lam=0.0)
    if report.min_grad <= 0.0 or report.min_tangential_second <= 0.0:
        raise ConvexityError(
            "initial data violates the interface non-degeneracy condition: "
            f"min |Dg| = {report.min_grad:.3e}, "
            f"min g_tt = {report.min_tangential_second:.3e}"
        )


def containment_check(inner: HeightField, outer: HeightField) -> float:
    """Penetration depth of the inner body's lower graph below the outer's.

    For lower graphs, body containment means h_inner >= h_outer pointwise,
    so the returned max(outer - inner) is <= 0 exactly when containment
    holds; positive values measure how deep the inner body pokes out.
    """
    if not inner.same_grid(outer):
        raise GridMismatchError("containment check requires a common grid")
    return float((outer.values - inner.values).max())
