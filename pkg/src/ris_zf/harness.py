"""Monte-Carlo sweeps over transmit power or RIS size.

Every trial is a pure function of ``(scenario, master_seed, trial)``: the
channel and the random-phase baseline draw from their own seed substreams,
so results do not depend on execution order or on the number of worker
processes.  Power sweeps reuse the same channel draws at every power level.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .alloc import ALGORITHMS, phase_rng, run_algorithm
from .channel import ScenarioConfig, draw_realization
from .errors import ConfigError
from .zf_core import SubspaceCache

__all__ = [
    "AXES",
    "CSV_COLUMNS",
    "SweepSpec",
    "TrialOutcome",
    "SweepRecord",
    "SweepResult",
    "load_config",
    "run_trial",
    "run_sweep",
    "emit",
    "format_csv",
]

AXES = {"power": "ptx_dbm", "elements": "n_ris"}
CSV_COLUMNS = ("axis", "axis_value", "algorithm", "mean_se", "std_se", "mean_users", "trials", "mean_ms")
_SWEEP_KEYS = {"power_sweep_dbm": "power", "elements_sweep": "elements"}


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    trials: int
    algorithms: tuple
    base: ScenarioConfig
    master_seed: int = 0

    def __post_init__(self):
        if self.axis not in AXES.values():
            raise ConfigError(f"axis must be one of {sorted(AXES.values())}")
        values = tuple(self.values)
        if not values or list(values) != sorted(values):
            raise ConfigError("sweep values must be non-empty and sorted")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithms {bad}; expected a subset of {ALGORITHMS}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    def scenario_at(self, value) -> ScenarioConfig:
        if self.axis == "n_ris":
            return replace(self.base, n_ris=int(value))
        return replace(self.base, ptx_dbm=float(value))


@dataclass
class TrialOutcome:
    algorithm: str
    se: float
    n_users: int
    ms: float
    error: str | None = None


@dataclass
class SweepRecord:
    axis: str
    axis_value: float
    algorithm: str
    mean_se: float
    std_se: float
    mean_users: float
    trials: int
    mean_ms: float


@dataclass
class SweepResult:
    records: list
    per_trial: dict = field(default_factory=dict)
    failures: int = 0


def load_config(path) -> tuple[ScenarioConfig, dict]:
    """Read a JSON scenario file.

    Top-level keys are :class:`ScenarioConfig` fields plus the optional
    ``power_sweep_dbm`` and ``elements_sweep`` lists.  Unknown keys are
    rejected.  Returns the scenario and a mapping ``{"power": [...],
    "elements": [...]}`` of the sweep values present in the file.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    sweeps = {_SWEEP_KEYS[k]: list(data.pop(k)) for k in list(data) if k in _SWEEP_KEYS}
    return ScenarioConfig.from_dict(data), sweeps


def run_trial(cfg: ScenarioConfig, seed: int, trial: int, algorithms, ptx: float | None = None):
    """Run each algorithm once on the channel draw of ``(seed, trial)``."""
    ptx = cfg.ptx_watts if ptx is None else ptx
    real = draw_realization(cfg, seed, trial)
    cache = SubspaceCache.from_realization(real)
    out = []
    for name in algorithms:
        t0 = time.perf_counter()
        try:
            res = run_algorithm(name, real, ptx, cache, phase_rng(seed, trial))
            out.append(TrialOutcome(name, res.se, res.n_users, 1e3 * (time.perf_counter() - t0)))
        except Exception as exc:  # recorded, a sweep never aborts on one draw
            out.append(TrialOutcome(name, math.nan, 0, 0.0, f"{type(exc).__name__}: {exc}"))
    return out


def _trial_job(args):
    cfg, seed, trial, algorithms = args
    return trial, run_trial(cfg, seed, trial, algorithms)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Execute all trials of all sweep points and aggregate per algorithm."""
    jobs = [
        (spec.scenario_at(v), spec.master_seed, t, spec.algorithms)
        for v in spec.values
        for t in range(spec.trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_trial_job(j) for j in jobs]

    per_trial: dict = {}
    failures = 0
    for (cfg, _, _, _), (trial, outcomes) in zip(jobs, results):
        value = getattr(cfg, spec.axis)
        for o in outcomes:
            per_trial.setdefault((value, o.algorithm), {})[trial] = o
            failures += o.error is not None

    records = []
    for value in spec.values:
        for name in sorted(spec.algorithms):
            rows = per_trial.get((value, name), {})
            ok = [rows[t] for t in sorted(rows) if rows[t].error is None]
            se = np.array([o.se for o in ok])
            records.append(
                SweepRecord(
                    axis=spec.axis,
                    axis_value=value,
                    algorithm=name,
                    mean_se=float(se.mean()) if ok else math.nan,
                    std_se=float(se.std(ddof=1)) if len(ok) > 1 else 0.0,
                    mean_users=float(np.mean([o.n_users for o in ok])) if ok else math.nan,
                    trials=len(ok),
                    mean_ms=float(np.mean([o.ms for o in ok])) if ok else math.nan,
                )
            )
    return SweepResult(records, per_trial, failures)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".9g")


def _rows(result: SweepResult, timing: bool):
    recs = sorted(result.records, key=lambda r: (r.axis_value, r.algorithm))
    for r in recs:
        yield {
            "axis": r.axis,
            "axis_value": r.axis_value,
            "algorithm": r.algorithm,
            "mean_se": r.mean_se,
            "std_se": r.std_se,
            "mean_users": r.mean_users,
            "trials": r.trials,
            "mean_ms": r.mean_ms if timing else math.nan,
        }


def format_csv(result: SweepResult, timing: bool = False) -> str:
    """CSV text of a sweep; wall time is written as ``nan`` unless ``timing``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in _rows(result, timing):
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def format_json(result: SweepResult, timing: bool = False) -> str:
    """JSON mirror of :func:`format_csv` with the same rounding."""
    rows = []
    for row in _rows(result, timing):
        rec = {}
        for c in CSV_COLUMNS:
            value = row[c]
            if c == "trials":
                rec[c] = int(value)
            elif isinstance(value, str):
                rec[c] = value
            else:
                rec[c] = float(_fmt(value))
        rows.append(rec)
    return json.dumps({"columns": list(CSV_COLUMNS), "records": rows}, indent=2) + "\n"


def emit(result: SweepResult, fmt: str, path, timing: bool = False) -> Path:
    """Write a sweep result as ``csv`` or ``json`` to ``path``."""
    if fmt == "csv":
        text = format_csv(result, timing)
    elif fmt == "json":
        text = format_json(result, timing)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    path.write_text(text)
    return path
