import json
import math

import numpy as np
import pytest

from hmcflow import cli
from hmcflow.cli import (
    RunConfig,
    emit_snapshot,
    make_initial_field,
    parse_config,
    run_experiment,
)
from hmcflow.errors import ConfigError
from hmcflow.flow import FlowState

from conftest import flat_disk_field, sphere_field


# --- parsing -----------------------------------------------------------------


def test_parse_minimal_sphere_config_fills_defaults():
    cfg = parse_config("kind = flow\nseed = 7\n")
    assert cfg.kind == "flow"
    assert cfg.seed == 7
    assert cfg["initial"] == "sphere"
    assert cfg["p"] == 0.5
    assert cfg["dt_safety"] == 0.9


def test_parse_rejects_out_of_range_p():
    with pytest.raises(ConfigError) as exc:
        parse_config("kind = flow\nseed = 1\np = 1.5\n")
    assert any("'p'" in v for v in exc.value.violations)


def test_parse_empty_input_reports_missing_fields():
    with pytest.raises(ConfigError) as exc:
        parse_config("")
    msgs = exc.value.violations
    assert any("kind" in m for m in msgs)
    assert any("seed" in m for m in msgs)


def test_parse_unknown_key_and_bad_type_collected_together():
    with pytest.raises(ConfigError) as exc:
        parse_config("kind = flow\nseed = banana\nwibble = 3\n")
    msgs = "\n".join(exc.value.violations)
    assert "wibble" in msgs
    assert "seed" in msgs


def test_parse_comments_and_duplicates():
    text = "kind = flow  # the experiment\nseed = 1\nseed = 2\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("duplicate" in v for v in exc.value.violations)


# --- snapshots ----------------------------------------------------------------


def test_emit_snapshot_round_trips_bitwise(tmp_path):
    field = sphere_field(n=33, half=0.5)
    state = FlowState(field=field, t=0.0, step_count=0)
    files = emit_snapshot(state, tmp_path)
    csvs = [f for f in files if f.suffix == ".csv"]
    reloaded = np.loadtxt(csvs[0], delimiter=",")
    assert np.array_equal(reloaded, field.values)
    meta = json.loads((tmp_path / "meta_0000000.json").read_text())
    assert meta["t"] == 0.0
    assert meta["interface"] == "no interface"


def test_emit_snapshot_writes_interface_curve(tmp_path):
    field = flat_disk_field(n=65, half=1.0, r0=0.5)
    state = FlowState(field=field, t=0.0, step_count=3)
    files = emit_snapshot(state, tmp_path)
    names = {f.name for f in files}
    assert "curve_0000003.csv" in names
    pts = np.loadtxt(tmp_path / "curve_0000003.csv", delimiter=",")
    assert pts.shape[1] == 2


def test_emit_snapshot_metadata_t_increases(tmp_path):
    field = sphere_field(n=33, half=0.5)
    emit_snapshot(FlowState(field=field, t=0.0, step_count=0), tmp_path)
    emit_snapshot(FlowState(field=field, t=0.5, step_count=100), tmp_path)
    t0 = json.loads((tmp_path / "meta_0000000.json").read_text())["t"]
    t1 = json.loads((tmp_path / "meta_0000100.json").read_text())["t"]
    assert t1 > t0


# --- experiments ----------------------------------------------------------------


def test_run_experiment_sphere_summary(tmp_path):
    cfg = parse_config(
        "kind = flow\nseed = 3\ninitial = sphere\ngrid_n = 49\n"
        "domain_half = 0.5\nt_end = 0.005\nrecord_every = 20\n"
    )
    report = run_experiment(cfg, tmp_path)
    assert report.exit_code == 0
    assert (tmp_path / "summary.json").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["max_apex_error_vs_sphere_oracle"] < 1e-3
    assert summary["completed"] is True


def test_run_experiment_t_end_zero_single_snapshot(tmp_path):
    cfg = parse_config(
        "kind = flow\nseed = 3\ngrid_n = 33\ndomain_half = 0.4\nt_end = 0.0\n"
    )
    report = run_experiment(cfg, tmp_path)
    assert report.exit_code == 0
    assert report.summary["snapshots"] == 1


def test_run_experiment_charts_validate(tmp_path):
    cfg = RunConfig(kind="charts-validate", seed=5, params={"n_samples": 8})
    report = run_experiment(cfg, tmp_path)
    assert report.exit_code == 0
    errata = json.loads((tmp_path / "chart_errata.json").read_text())
    assert "entries" in errata and "summary" in errata


def test_run_experiment_model_pde(tmp_path):
    cfg = RunConfig(kind="model_pde", seed=5, params={"t_end": 0.01, "dt": 1e-3})
    report = run_experiment(cfg, tmp_path)
    assert report.exit_code == 0
    assert report.summary["boundary_l2_error"] < 1e-3
    assert (tmp_path / "coefficient_discrepancies.json").exists()


def test_run_experiment_norms(tmp_path):
    cfg = RunConfig(kind="norms", seed=5, params={})
    report = run_experiment(cfg, tmp_path)
    assert report.exit_code == 0
    assert report.summary["rough_zp_half"]["growth"] >= 2.0
    assert abs(report.summary["in_class_zp"]["growth"] - 1.0) < 0.05


def test_run_experiment_oracle_table(tmp_path):
    cfg = RunConfig(kind="oracle", seed=5, params={"t_end": 0.1})
    report = run_experiment(cfg, tmp_path)
    rows = json.loads((tmp_path / "oracle_table.json").read_text())["rows"]
    assert rows[0]["sphere_radius"] == 1.0
    assert rows[-1]["circle_radius"] == pytest.approx(math.sqrt(0.25 - 0.2))


def test_determinism_identical_outputs(tmp_path):
    text = (
        "kind = flow\nseed = 11\ninitial = flat_disk\ngrid_n = 49\n"
        "domain_half = 1.0\nt_end = 0.002\nrecord_every = 10\n"
    )
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_experiment(parse_config(text), out1)
    run_experiment(parse_config(text), out2)
    for f1 in sorted(out1.iterdir()):
        f2 = out2 / f1.name
        assert f2.exists()
        assert f1.read_bytes() == f2.read_bytes()


def test_cli_main_runs_oracle_table(tmp_path, capsys):
    code = cli.main(["oracle-table", "--out", str(tmp_path), "--seed", "4"])
    assert code == 0
    out = capsys.readouterr().out
    assert '"kind": "oracle"' in out


def test_cli_main_reports_config_errors(tmp_path, capsys):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("kind = flow\nseed = 1\np = 2.0\n")
    code = cli.main(["run", "--config", str(cfg_file)])
    assert code == 1
    assert "p" in capsys.readouterr().err


def test_make_initial_field_selectors():
    sphere = make_initial_field(parse_config("kind = flow\nseed = 1\ngrid_n = 33\ndomain_half = 0.4\n"))
    assert sphere.values.min() >= 0.0
    disk = make_initial_field(
        parse_config("kind = flow\nseed = 1\ninitial = flat_disk\ngrid_n = 33\ndomain_half = 1.0\n")
    )
    assert (disk.values == 0.0).sum() > 10
    with pytest.raises(ConfigError):
        make_initial_field(
            parse_config("kind = flow\nseed = 1\ngrid_n = 33\ndomain_half = 2.0\n")
        )
