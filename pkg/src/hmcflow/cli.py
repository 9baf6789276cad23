"""Configuration, run orchestration, and snapshot persistence.

One flat key = value config file drives a run; every emitted float uses 17
significant digits so CSV and JSON round-trip bitwise, and a mandatory seed
makes identical configs produce identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import analysis, charts, flow, interface, model_pde, oracle
from .errors import ConfigError, HmcflowError
from .geometry import HeightField

__all__ = [
    "RunConfig",
    "parse_config",
    "emit_snapshot",
    "run_experiment",
    "main",
    "make_initial_field",
]

_KINDS = ("flow", "model_pde", "charts-validate", "norms", "oracle")

# key: (type, default, validator, description); required keys have default None
_SCHEMA = {
    "kind": (str, None, lambda v: v in _KINDS, f"one of {_KINDS}"),
    "seed": (int, None, lambda v: v >= 0, "nonnegative integer (mandatory)"),
    "initial": (
        str,
        "sphere",
        lambda v: v in ("sphere", "flat_disk", "paraboloid"),
        "sphere | flat_disk | paraboloid",
    ),
    "radius": (float, 1.0, lambda v: v > 0, "positive"),
    "flat_radius": (float, 0.5, lambda v: v > 0, "positive"),
    "center_z": (float, None, lambda v: True, "vertical center of a sphere field"),
    "grid_n": (int, 129, lambda v: v >= 5, ">= 5"),
    "domain_half": (float, 0.6, lambda v: v > 0, "positive half-width"),
    "flat_tol": (float, 1e-9, lambda v: v > 0, "positive"),
    "dt_safety": (float, 0.9, lambda v: 0 < v <= 1, "in (0, 1]"),
    "t_end": (float, 0.1, lambda v: v >= 0, "nonnegative"),
    "denom_eps": (float, None, lambda v: v > 0, "positive"),
    "record_every": (int, 100, lambda v: v >= 0, "nonnegative"),
    "p": (float, 0.5, lambda v: 0 < v < 1, "must satisfy 0 < p < 1"),
    "method": (str, "euler", lambda v: v in ("euler", "rk2"), "euler | rk2"),
    "out": (str, ".", lambda v: True, "output directory"),
    "alpha": (float, 0.5, lambda v: 0 < v <= 1, "in (0, 1]"),
    "n_samples": (int, 100, lambda v: v > 0, "positive"),
    "dy": (float, 2 * math.pi / 256, lambda v: v > 0, "positive"),
    "dt": (float, 1e-4, lambda v: v > 0, "positive"),
}
_REQUIRED = ("kind", "seed")


@dataclass
class RunConfig:
    """Validated flat configuration of one experiment."""

    kind: str
    seed: int
    params: dict = dc_field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        return self.params.get(key, default)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a key = value config.

    Collects every violation (unknown key, bad type, out-of-range value,
    missing required field) and raises one ConfigError naming them all;
    defaults fill the optional keys.
    """
    violations = []
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            violations.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, _, val = stripped.partition("=")
        key, val = key.strip(), val.strip()
        if key in raw:
            violations.append(f"duplicate key '{key}'")
        raw[key] = val

    params = {}
    for key, val in raw.items():
        if key not in _SCHEMA:
            violations.append(f"unknown key '{key}'")
            continue
        typ, _default, check, desc = _SCHEMA[key]
        try:
            parsed = typ(val)
        except ValueError:
            violations.append(f"key '{key}': cannot parse {val!r} as {typ.__name__}")
            continue
        if not check(parsed):
            violations.append(f"key '{key}': value {parsed!r} out of range ({desc})")
            continue
        params[key] = parsed

    for key in _REQUIRED:
        if key not in params and not any(f"'{key}'" in v for v in violations):
            violations.append(f"missing required key '{key}'")

    if violations:
        raise ConfigError(violations)

    for key, (typ, default, _check, _desc) in _SCHEMA.items():
        if key not in params and default is not None:
            params[key] = default

    return RunConfig(kind=params.pop("kind"), seed=params.pop("seed"), params=params)


# ---------------------------------------------------------------------------
# initial data


def make_initial_field(cfg: RunConfig) -> HeightField:
    """Build the initial height field selected by the config."""
    n = cfg.get("grid_n", 129)
    half = cfg.get("domain_half", 0.6)
    dx = 2.0 * half / (n - 1)
    xs = np.linspace(-half, half, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    rho = np.hypot(X, Y)
    kind = cfg.get("initial", "sphere")
    if kind == "sphere":
        R = cfg.get("radius", 1.0)
        cz = cfg.get("center_z")
        cz = R if cz is None else cz
        if rho.max() >= R:
            raise ConfigError(["sphere field: domain_half too large for the radius"])
        vals = cz - np.sqrt(R * R - rho * rho)
    elif kind == "flat_disk":
        r0 = cfg.get("flat_radius", 0.5)
        vals = np.maximum(rho - r0, 0.0) ** 2
    else:  # paraboloid
        vals = 0.5 * cfg.get("radius", 1.0) * rho * rho + 1e-3
    return HeightField(
        dx=dx, dy=dx, origin=(-half, -half), values=vals, flat_tol=cfg.get("flat_tol", 1e-9)
    )


# ---------------------------------------------------------------------------
# serialization (17 significant digits everywhere)


def _fmt(x) -> float:
    return float(f"{float(x):.17g}")


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return _fmt(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_default(v) if isinstance(v, np.generic) else v for v in obj.tolist()]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path: Path, payload: dict) -> None:
    def walk(o):
        if isinstance(o, dict):
            return {k: walk(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [walk(v) for v in o]
        if isinstance(o, (float, np.floating)):
            return _fmt(o)
        return o

    path.write_text(json.dumps(walk(payload), indent=2, default=_json_default) + "\n")


def emit_snapshot(
    state: flow.FlowState,
    outdir,
    margins: analysis.StarReport | None = None,
    interface_level: float | None = None,
) -> list:
    """Write one snapshot: height CSV, interface CSV, metadata JSON.

    The height CSV is row-major with 17 significant digits so reloading
    reproduces the field bitwise; the curve file is omitted (and noted in
    the metadata) when there is no interface.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = f"{state.step_count:07d}"
    written = []

    field_path = outdir / f"field_{tag}.csv"
    np.savetxt(field_path, state.field.values, delimiter=",", fmt="%.17g")
    written.append(field_path)

    level = interface_level if interface_level is not None else state.field.flat_tol
    curve = None
    interface_note = None
    try:
        curve = interface.extract_interface(state.field, level=level)
    except HmcflowError as exc:
        interface_note = f"interface extraction failed: {exc}"
    if curve is not None:
        curve_path = outdir / f"curve_{tag}.csv"
        np.savetxt(curve_path, curve.points, delimiter=",", fmt="%.17g")
        written.append(curve_path)
    elif interface_note is None:
        interface_note = "no interface"

    meta = {
        "t": _fmt(state.t),
        "step": state.step_count,
        "min_denominator": _fmt(state.min_denominator)
        if math.isfinite(state.min_denominator)
        else None,
        "grid": {
            "nx": state.field.nx,
            "ny": state.field.ny,
            "dx": _fmt(state.field.dx),
            "dy": _fmt(state.field.dy),
            "origin": [_fmt(state.field.origin[0]), _fmt(state.field.origin[1])],
        },
    }
    if interface_note:
        meta["interface"] = interface_note
    if margins is not None:
        meta["star_margins"] = {
            "min_grad": _fmt(margins.min_grad),
            "min_tangential_second": _fmt(margins.min_tangential_second),
            "n_samples": margins.n_samples,
        }
    meta_path = outdir / f"meta_{tag}.json"
    write_json(meta_path, meta)
    written.append(meta_path)
    return written


# ---------------------------------------------------------------------------
# experiment pipelines


def _run_flow(cfg: RunConfig, outdir: Path) -> dict:
    initial = make_initial_field(cfg)
    fcfg = flow.FlowConfig(
        dt_safety=cfg.get("dt_safety", 0.9),
        t_end=cfg.get("t_end", 0.1),
        denom_eps=cfg.get("denom_eps"),
        record_every=cfg.get("record_every", 100),
        p=cfg.get("p", 0.5),
        method=cfg.get("method", "euler"),
    )
    result = flow.run(initial, fcfg)

    is_sphere = cfg.get("initial", "sphere") == "sphere"
    R0 = cfg.get("radius", 1.0)
    cz = cfg.get("center_z")
    cz = R0 if cz is None else cz
    i0 = initial.nx // 2

    apex_errors = []
    radius_errors = []
    margins_per_snap = []
    for snap in result.snapshots:
        margins = None
        if is_sphere:
            exact = cz - oracle.sphere_radius(R0, snap.t)
            apex_errors.append(abs(snap.field.values[i0, i0] - exact))
        else:
            try:
                curve = interface.extract_interface(snap.field, level=snap.field.flat_tol)
            except HmcflowError:
                curve = None
            if curve is not None:
                g = analysis.pressure(snap.field, fcfg.p)
                try:
                    margins = analysis.check_star(g, curve, lam=0.0)
                    margins_per_snap.append(
                        [snap.t, margins.min_grad, margins.min_tangential_second]
                    )
                except HmcflowError:
                    margins = None
                radii = np.hypot(*(curve.points - curve.centroid()).T)
                try:
                    r_exact = oracle.circle_csf_radius(cfg.get("flat_radius", 0.5), snap.t)
                    radius_errors.append(abs(float(radii.mean()) - r_exact))
                except oracle.ExtinctError:
                    pass
        emit_snapshot(snap, outdir, margins=margins)

    summary = {
        "kind": "flow",
        "completed": result.completed,
        "failure": result.failure,
        "snapshots": len(result.snapshots),
        "t_final": _fmt(result.final.t),
        "steps": result.final.step_count,
    }
    if apex_errors:
        summary["max_apex_error_vs_sphere_oracle"] = _fmt(max(apex_errors))
    if radius_errors:
        summary["max_interface_radius_error_vs_circle_oracle"] = _fmt(max(radius_errors))
    if margins_per_snap:
        summary["star_margins"] = margins_per_snap
    return summary


def _run_model_pde(cfg: RunConfig, outdir: Path) -> dict:
    """Manufactured boundary-problem run plus the coefficient discrepancy report."""
    dy = cfg.get("dy", 2 * math.pi / 256)
    dt = cfg.get("dt", 1e-4)
    t_end = cfg.get("t_end", 0.1)
    n = int(round(2 * math.pi / dy))
    y = np.arange(n) * dy
    coeffs = model_pde.ModelCoefficients(a11=1.0, a12=0.25, a22=1.0, b1=0.5, b2=0.0, c=0.0)
    sol = model_pde.solve_boundary_problem(
        coeffs, y, np.sin(y), phi=None, t_end=t_end, dt=dt
    )
    exact = math.e ** (-t_end) * np.sin(y)
    err = sol.values[-1] - exact
    l2 = float(np.sqrt(dy * np.sum(err * err)))
    report = model_pde.transform_discrepancy_report(
        coeffs, cfg.get("p", 0.5), w=np.linspace(-4, 0, 9), y=y[::32], t=np.array([0.0])
    )
    write_json(outdir / "coefficient_discrepancies.json", report)
    return {
        "kind": "model_pde",
        "boundary_l2_error": _fmt(l2),
        "dy": _fmt(dy),
        "dt": _fmt(dt),
        "t_end": _fmt(t_end),
        "discrepancy_report": "coefficient_discrepancies.json",
    }


def _run_charts(cfg: RunConfig, outdir: Path) -> dict:
    n = cfg.get("n_samples", 100)
    report = charts.errata_report(seed=cfg.seed, n_general=n // 2, n_vertical=n - n // 2)
    write_json(outdir / "chart_errata.json", report)
    return {
        "kind": "charts-validate",
        "samples": report["summary"]["samples_general"]
        + report["summary"]["samples_vertical"],
        "failing_entries": report["summary"]["failures"],
        "errata": "chart_errata.json",
    }


def _run_norms(cfg: RunConfig, outdir: Path) -> dict:
    """Refinement study of the weighted-norm detectors.

    A field of the form z^p * smooth keeps a stable norm when the window
    floor drops; a rougher power grows without bound, which is what the
    split-norm construction is built to detect.
    """
    p = cfg.get("p", 0.5)
    alpha = cfg.get("alpha", 0.5)
    reports = {}
    full_reports = {}
    for label, exponent in (("in_class_zp", p), ("rough_zp_half", p / 2.0)):
        sups = []
        for tag, w_min in (("shallow", -4.0), ("deep", -4.0 - math.log(64.0))):
            w = np.linspace(w_min, 0.0, 161)
            y = np.linspace(-1.0, 1.0, 41)
            z = np.concatenate([[0.0], np.exp(w)])
            vals = (z[:, None] ** exponent) * np.cos(y)[None, :]
            lf = analysis.log_decompose(z, y, vals, p=p)
            rep = analysis.holder_norm(lf, alpha=alpha, seed=cfg.seed)
            sups.append(rep.parts["tilde"]["c0"])
            full_reports[f"{label}_{tag}"] = rep.as_dict()
        reports[label] = {
            "tilde_sup_shallow": _fmt(sups[0]),
            "tilde_sup_deep": _fmt(sups[1]),
            "growth": _fmt(sups[1] / max(sups[0], 1e-300)),
        }
    write_json(outdir / "norm_reports.json", {"summary": reports, "reports": full_reports})
    return {"kind": "norms", **reports}


def _run_oracle(cfg: RunConfig, outdir: Path) -> dict:
    R0 = cfg.get("radius", 1.0)
    r0 = cfg.get("flat_radius", 0.5)
    t_end = cfg.get("t_end", 0.1)
    ts = np.linspace(0.0, t_end, 11)
    rows = []
    for t in ts:
        row = {"t": _fmt(t)}
        try:
            row["sphere_radius"] = _fmt(oracle.sphere_radius(R0, t))
        except oracle.ExtinctError:
            row["sphere_radius"] = None
        try:
            row["circle_radius"] = _fmt(oracle.circle_csf_radius(r0, t))
        except oracle.ExtinctError:
            row["circle_radius"] = None
        rows.append(row)
    write_json(outdir / "oracle_table.json", {"rows": rows})
    return {"kind": "oracle", "rows": len(rows)}


_PIPELINES = {
    "flow": _run_flow,
    "model_pde": _run_model_pde,
    "charts-validate": _run_charts,
    "norms": _run_norms,
    "oracle": _run_oracle,
}


@dataclass(frozen=True)
class ExitReport:
    exit_code: int
    summary: dict


def run_experiment(cfg: RunConfig, outdir=None) -> ExitReport:
    """Dispatch a validated config to its pipeline and write summary.json."""
    out = Path(outdir if outdir is not None else cfg.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed % (2**32))  # legacy global seeding for any stray consumer
    try:
        summary = _PIPELINES[cfg.kind](cfg, out)
        code = 0 if not summary.get("failure") else 2
    except HmcflowError as exc:
        summary = {"kind": cfg.kind, "failure": f"{type(exc).__name__}: {exc}"}
        code = 2
    summary["seed"] = cfg.seed
    summary["exit_code"] = code
    write_json(out / "summary.json", summary)
    return ExitReport(exit_code=code, summary=summary)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hmcflow",
        description="Degenerate-flow numerical laboratory: run simulations, "
        "validate the chart formulary, and compute weighted-norm reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in (
        ("run", None),
        ("validate-charts", "charts-validate"),
        ("norms", "norms"),
        ("oracle-table", "oracle"),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, default=None, help="config file path")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the seed")
        sp.set_defaults(kind_override=kind)

    args = parser.parse_args(argv)
    text = args.config.read_text() if args.config else ""
    if args.kind_override and "kind" not in text:
        text = f"kind = {args.kind_override}\n" + text
    if args.seed is not None and "seed" not in text:
        text += f"\nseed = {args.seed}\n"

    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 1
    if args.kind_override:
        cfg = RunConfig(kind=args.kind_override, seed=cfg.seed, params=cfg.params)
    report = run_experiment(cfg, outdir=args.out)
    print(json.dumps(report.summary, indent=2, default=_json_default))
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
