"""Per-run metrics in the units of the benchmark tables."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidInputError
from ..planner import PlanResult

JERK_DEFINITION = "signed mean of second differences of position-derived speed / dt^2"
TIMING_SCOPE = "planning rounds only (rollout and validation included, I/O excluded)"


@dataclass(frozen=True)
class MetricsRecord:
    """Summary of one executed run.

    ``objective_evaluations`` is the total number of true objective
    evaluations; ``evals_per_round`` divides it by the number of sampling
    rounds, which is the figure compared across planners.
    """

    steps: int
    trajectory_length: float       # m
    total_planning_time: float     # ms
    time_per_step: float           # ms
    avg_velocity: float            # m/s
    avg_jerk: float                # m/s^3
    success: bool
    objective_evaluations: int
    evals_per_round: float
    planning_rounds: int
    termination: str
    max_constraint: float = float("nan")

    def to_dict(self) -> dict:
        """Plain dict with non-finite floats mapped to ``None`` (valid JSON)."""
        d = dataclasses.asdict(self)
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in d.items()}


def path_length(positions: np.ndarray) -> float:
    if len(positions) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(positions, axis=0), axis=1).sum())


def speed_profile(positions: np.ndarray, dt: float) -> np.ndarray:
    """Linear speed over each step, from consecutive positions."""
    if len(positions) < 2:
        return np.zeros(0)
    return np.linalg.norm(np.diff(positions, axis=0), axis=1) / dt


def avg_jerk_from_speeds(speeds: Sequence[float], dt: float) -> float:
    """Signed mean of ``(s[i+2] - 2 s[i+1] + s[i]) / dt**2``; 0 below three speeds."""
    s = np.asarray(speeds, dtype=float)
    if s.size < 3:
        return 0.0
    return float(np.mean(np.diff(s, n=2)) / dt ** 2)


def compute_metrics(result: PlanResult, timings: Sequence[float] | None = None,
                    max_constraint: float = float("nan")) -> MetricsRecord:
    """Metrics for an executed run.

    Parameters
    ----------
    result
        Output of a planner run.
    timings
        Planning wall time of each round in seconds.  Defaults to the times
        recorded in the step diagnostics.
    max_constraint
        Worst executed constraint value, if the caller validated the run.
    """
    traj = np.asarray(result.trajectory)
    if traj.ndim != 2 or traj.shape[0] < 1:
        raise InvalidInputError("result has no trajectory")
    pos = traj[:, : result.goal.shape[0]]
    steps = traj.shape[0] - 1
    length = path_length(pos)
    if timings is None:
        timings = [d.wall_time for d in result.diagnostics]
    total_ms = 1000.0 * float(np.sum(timings)) if len(timings) else 0.0
    evals = int(sum(d.evaluations for d in result.diagnostics))
    sampling = int(sum(d.sampling_rounds for d in result.diagnostics))
    return MetricsRecord(
        steps=steps,
        trajectory_length=length,
        total_planning_time=total_ms,
        time_per_step=total_ms / steps if steps else 0.0,
        avg_velocity=length / (steps * result.dt) if steps else 0.0,
        avg_jerk=avg_jerk_from_speeds(speed_profile(pos, result.dt), result.dt),
        success=bool(result.success),
        objective_evaluations=evals,
        evals_per_round=evals / sampling if sampling else 0.0,
        planning_rounds=result.planning_rounds,
        termination=result.termination,
        max_constraint=float(max_constraint),
    )
