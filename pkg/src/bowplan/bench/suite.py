"""Benchmark suites: scenarios x seeds x planners, summarized per cell.

A suite file is a JSON object::

    {
      "seeds": [0, 1, 2],          # or "seed_count": 10
      "planners": ["bow", "dwa"],
      "scenarios": [{...scenario...}, {"include": "other.json"}]
    }

Each scenario entry follows :mod:`bowplan.bench.scenario`; its own
``planner`` and ``seed`` are replaced by the suite's cross product.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import InvalidInputError
from .metrics import MetricsRecord
from .scenario import PLANNERS, Scenario, ScenarioError, atomic_write, run_scenario

SUMMARY_COLUMNS = [
    "env", "planner", "seed_count", "steps_mean", "steps_std", "traj_length_m_mean",
    "traj_length_m_std", "total_time_ms_mean", "total_time_ms_std", "time_per_step_ms",
    "avg_velocity_mean", "avg_velocity_std", "avg_jerk_mean", "avg_jerk_std",
    "success_rate", "obj_evals_mean",
]


@dataclass(frozen=True)
class Suite:
    scenarios: tuple
    seeds: tuple = tuple(range(10))
    planners: tuple = ("bow",)

    def __post_init__(self):
        bad = [p for p in self.planners if p not in PLANNERS]
        if bad:
            raise InvalidInputError(f"unknown planners {bad}")
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise InvalidInputError("scenario names must be unique within a suite")


def suite_from_dict(d: dict, base_dir: str | os.PathLike = ".") -> Suite:
    if not isinstance(d, dict):
        raise InvalidInputError("suite must be a JSON object")
    if "seeds" in d and "seed_count" in d:
        raise InvalidInputError("give either 'seeds' or 'seed_count', not both")
    seeds = tuple(int(s) for s in d["seeds"]) if "seeds" in d else tuple(
        range(int(d.get("seed_count", 10))))
    planners = tuple(d.get("planners", ["bow"]))
    base = Path(base_dir)
    scenarios = []
    for i, entry in enumerate(d.get("scenarios", [])):
        if isinstance(entry, dict) and set(entry) == {"include"}:
            path = base / entry["include"]
            try:
                entry = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise InvalidInputError(f"scenarios[{i}]: cannot include {path}: {exc}")
        try:
            scenarios.append(Scenario.from_dict(entry, base))
        except (InvalidInputError, TypeError) as exc:
            raise InvalidInputError(f"scenarios[{i}]: {exc}") from exc
    return Suite(tuple(scenarios), seeds, planners)


def load_suite(path: str | os.PathLike) -> Suite:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}")
    return suite_from_dict(doc, p.parent)


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------


@dataclass
class RunRecord:
    env: str
    planner: str
    seed: int
    metrics: MetricsRecord | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return (self.metrics is not None and self.metrics.success
                and not (self.metrics.max_constraint > 0))


@dataclass
class SuiteResult:
    rows: list
    runs: list
    failed_mandatory: list = field(default_factory=list)

    @property
    def exit_status(self) -> int:
        return 1 if self.failed_mandatory else 0

    def csv_text(self) -> str:
        return summary_csv(self.rows)


def _run_one(scn: Scenario, out_dir, clock) -> RunRecord:
    try:
        outcome = run_scenario(scn, out_dir, clock) if clock else run_scenario(scn, out_dir)
        return RunRecord(scn.name, scn.planner, scn.seed, outcome.metrics)
    except ScenarioError as exc:
        return RunRecord(scn.name, scn.planner, scn.seed, None, str(exc))


def _task(args):
    return _run_one(*args)


def _mean_std(values: Sequence[float]):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return None, None
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), std


def summarize(env: str, planner: str, runs: Sequence[RunRecord]) -> dict:
    """One summary row; metric statistics use successful runs only.

    Columns are left empty (``None``) when no run succeeded, the table's
    equivalent of "no solution".  The standard deviation is the sample one.
    """
    good = [r.metrics for r in runs if r.ok]
    done = [r.metrics for r in runs if r.metrics is not None]
    row = {c: None for c in SUMMARY_COLUMNS}
    row.update(env=env, planner=planner, seed_count=len(runs),
               success_rate=len(good) / len(runs) if runs else None)
    for prefix, attr in (("steps", "steps"), ("traj_length_m", "trajectory_length"),
                         ("total_time_ms", "total_planning_time"),
                         ("avg_velocity", "avg_velocity"), ("avg_jerk", "avg_jerk")):
        row[f"{prefix}_mean"], row[f"{prefix}_std"] = _mean_std([getattr(m, attr) for m in good])
    row["time_per_step_ms"] = _mean_std([m.time_per_step for m in good])[0]
    row["obj_evals_mean"] = _mean_std([m.evals_per_round for m in done])[0]
    return row


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def summary_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_cell(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def run_suite(suite: Suite, out_dir: str | os.PathLike | None = None, jobs: int = 1,
              clock: Callable[[], float] | None = None,
              progress: Callable[[RunRecord], None] | None = None) -> SuiteResult:
    """Run every (scenario, planner, seed) cell and aggregate the results.

    Per-scenario failures are recorded and the suite continues.  With
    ``jobs > 1`` the runs execute in worker processes; results are gathered
    in submission order, so the table does not depend on ``jobs``.  A
    custom ``clock`` must be picklable when ``jobs > 1``.
    """
    if jobs < 1:
        raise InvalidInputError("jobs must be >= 1")
    tasks = []
    for scn in suite.scenarios:
        for planner in suite.planners:
            for seed in suite.seeds:
                cell = scn.with_overrides(planner=planner, seed=seed)
                run_dir = (Path(out_dir) / "runs" / scn.name / planner / f"seed{seed}"
                           if out_dir is not None else None)
                tasks.append((cell, run_dir, clock))
    if jobs == 1 or len(tasks) <= 1:
        records = []
        for t in tasks:
            records.append(_task(t))
            if progress:
                progress(records[-1])
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = []
            for rec in pool.map(_task, tasks):
                records.append(rec)
                if progress:
                    progress(rec)
    rows, failed = [], []
    i = 0
    for scn in suite.scenarios:
        for planner in suite.planners:
            cell = records[i: i + len(suite.seeds)]
            i += len(suite.seeds)
            row = summarize(scn.name, planner, cell)
            rows.append(row)
            if scn.mandatory and cell and (any(r.error for r in cell)
                                           or row["success_rate"] < scn.min_success_rate
                                           or any(r.metrics.max_constraint > 0 for r in cell)):
                failed.append((scn.name, planner))
    result = SuiteResult(rows, records, failed)
    if out_dir is not None:
        atomic_write(Path(out_dir) / "summary.csv", result.csv_text())
    return result
