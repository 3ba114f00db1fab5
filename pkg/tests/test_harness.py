import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from ris_zf import harness
from ris_zf.alloc import ALGORITHMS
from ris_zf.channel import ScenarioConfig
from ris_zf.errors import ConfigError
from ris_zf.harness import (
    CSV_COLUMNS,
    SweepResult,
    SweepSpec,
    emit,
    format_csv,
    format_json,
    load_config,
    run_sweep,
    run_trial,
)

GOLDEN = Path(__file__).parent / "golden" / "mini_power_sweep.csv"
SMALL = ScenarioConfig(n_ris=16)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("ptx_dbm", (), 1, ("direct",), SMALL)
    with pytest.raises(ConfigError):
        SweepSpec("ptx_dbm", (10, 0), 1, ("direct",), SMALL)
    with pytest.raises(ConfigError):
        SweepSpec("ptx_dbm", (0,), 0, ("direct",), SMALL)
    with pytest.raises(ConfigError):
        SweepSpec("ptx_dbm", (0,), 1, ("magic",), SMALL)
    with pytest.raises(ConfigError):
        SweepSpec("bandwidth", (0,), 1, ("direct",), SMALL)


def test_run_trial_deterministic():
    a = run_trial(SMALL, 11, 4, ["direct", "direct"])
    b = run_trial(SMALL, 11, 4, ["direct"])
    assert a[0].se == a[1].se == b[0].se


def test_run_trial_dead_ris(monkeypatch):
    original = harness.draw_realization
    monkeypatch.setattr(harness, "draw_realization", lambda *a: original(*a).with_dead_ris())
    direct, greedy = run_trial(SMALL, 0, 0, ["direct", "greedy"])
    assert greedy.se == pytest.approx(direct.se, abs=1e-9)


def test_greedy_dominates_direct_per_trial():
    # default scenario at 128 elements, every trial
    outcomes = [run_trial(ScenarioConfig(), 0, t, ["direct", "greedy"]) for t in range(40)]
    for direct, greedy in outcomes:
        assert greedy.se >= direct.se - 1e-9


def test_failures_recorded_not_fatal(monkeypatch):
    def boom(name, *args):
        raise RuntimeError("synthetic")

    monkeypatch.setattr(harness, "run_algorithm", boom)
    out = run_trial(SMALL, 0, 0, ["direct"])
    assert out[0].error.startswith("RuntimeError")
    res = run_sweep(SweepSpec("ptx_dbm", (20,), 2, ("direct",), SMALL))
    assert res.failures == 2
    assert res.records[0].trials == 0 and math.isnan(res.records[0].mean_se)


def test_single_trial_sweep_equals_run_trial():
    res = run_sweep(SweepSpec("ptx_dbm", (20,), 1, ("direct", "greedy"), SMALL, 5))
    ref = {o.algorithm: o for o in run_trial(SMALL, 5, 0, ["direct", "greedy"])}
    for rec in res.records:
        assert rec.mean_se == ref[rec.algorithm].se
        assert rec.mean_users == ref[rec.algorithm].n_users
        assert rec.std_se == 0.0


def test_more_trials_keep_prefix():
    spec2 = SweepSpec("n_ris", (8, 16), 2, ("random", "addone"), SMALL, 9)
    spec4 = SweepSpec("n_ris", (8, 16), 4, ("random", "addone"), SMALL, 9)
    r2, r4 = run_sweep(spec2), run_sweep(spec4)
    for key, rows in r2.per_trial.items():
        for t, o in rows.items():
            assert r4.per_trial[key][t].se == o.se


def test_aggregation_matches_streaming_oracle():
    res = run_sweep(SweepSpec("ptx_dbm", (10, 20), 5, ALGORITHMS, SMALL, 3))
    for rec in res.records:
        ses = [res.per_trial[(rec.axis_value, rec.algorithm)][t].se for t in range(5)]
        # Welford running mean/variance
        mean, m2 = 0.0, 0.0
        for n, x in enumerate(ses, start=1):
            delta = x - mean
            mean += delta / n
            m2 += delta * (x - mean)
        assert rec.mean_se == pytest.approx(mean, rel=1e-12)
        assert rec.std_se == pytest.approx(math.sqrt(m2 / 4), rel=1e-9)
        assert rec.trials == 5 and rec.mean_se >= 0


def test_header_only_csv():
    res = run_sweep(SweepSpec("ptx_dbm", (20,), 1, (), SMALL))
    assert format_csv(res) == ",".join(CSV_COLUMNS) + "\n"


def test_csv_roundtrip_one_record():
    res = run_sweep(SweepSpec("ptx_dbm", (20,), 2, ("direct",), SMALL))
    rows = list(csv.DictReader(io.StringIO(format_csv(res, timing=True))))
    assert len(rows) == 1
    rec = res.records[0]
    row = rows[0]
    assert list(row) == list(CSV_COLUMNS)
    assert row["axis"] == rec.axis and row["algorithm"] == rec.algorithm
    assert int(row["trials"]) == rec.trials
    for col in ("axis_value", "mean_se", "std_se", "mean_users", "mean_ms"):
        assert float(row[col]) == pytest.approx(getattr(rec, col), rel=1e-8)


def test_json_mirrors_csv(tmp_path):
    res = run_sweep(SweepSpec("ptx_dbm", (0, 20), 2, ("direct", "random"), SMALL))
    path = emit(res, "json", tmp_path / "out.json")
    data = json.loads(path.read_text())
    rows = list(csv.DictReader(io.StringIO(format_csv(res))))
    assert data["columns"] == list(CSV_COLUMNS)
    for rec, row in zip(data["records"], rows):
        for col in CSV_COLUMNS:
            if col in ("axis", "algorithm"):
                assert rec[col] == row[col]
            elif col == "mean_ms":
                assert math.isnan(rec[col]) and row[col] == "nan"
            else:
                assert rec[col] == float(row[col])


def test_rows_sorted():
    res = run_sweep(SweepSpec("ptx_dbm", (0, 20), 1, ("random", "direct"), SMALL))
    rows = list(csv.DictReader(io.StringIO(format_csv(res))))
    keys = [(float(r["axis_value"]), r["algorithm"]) for r in rows]
    assert keys == sorted(keys)


def test_golden_mini_sweep():
    spec = SweepSpec("ptx_dbm", (0.0, 20.0), 3, ("addone", "direct", "greedy", "random"), SMALL, 2024)
    assert format_csv(run_sweep(spec)) == GOLDEN.read_text()


def test_load_config_builtin(tmp_path):
    from importlib import resources

    path = Path(str(resources.files("ris_zf") / "configs" / "k12.json"))
    cfg, sweeps = load_config(path)
    assert cfg.n_users == 12 and cfg.n_ris == 128
    assert sweeps["power"] == [0, 5, 10, 15, 20, 25, 30]
    assert sweeps["elements"] == [16, 32, 64, 128, 256]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_users": 4, "colour": "red"}))
    with pytest.raises(ConfigError):
        load_config(bad)
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_emit_unwritable(tmp_path):
    res = run_sweep(SweepSpec("ptx_dbm", (20,), 1, ("direct",), SMALL))
    with pytest.raises(OSError):
        emit(res, "csv", tmp_path / "missing" / "out.csv")


@pytest.mark.slow
def test_power_sweep_mean_se_monotone():
    spec = SweepSpec("ptx_dbm", (0, 5, 10, 15, 20, 25, 30), 200, ALGORITHMS, ScenarioConfig(), 0)
    res = run_sweep(spec)
    assert res.failures == 0
    for name in ALGORITHMS:
        means = [r.mean_se for r in res.records if r.algorithm == name]
        assert all(b >= a for a, b in zip(means, means[1:])), (name, means)
