"""Dynamic-window grid search, used as the benchmark comparator."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import lex_argmax
from .errors import InvalidInputError
from .kinematics import dynamic_window, rollout, rollout_batch
from .planner import PlannerConfig, PlanResult, StepDiagnostics, run_loop, safest_stop
from .world import World, validate_trajectory


@dataclass(frozen=True)
class DwaConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    resolution: tuple = (20, 20)
    w_goal: float = 1.0
    w_clearance: float = 0.2
    w_velocity: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        if any(r < 2 for r in self.resolution):
            raise InvalidInputError("grid resolution must be >= 2 per axis")
        if min(self.w_goal, self.w_clearance, self.w_velocity) < 0:
            raise InvalidInputError("DWA weights must be non-negative")
        if len(self.resolution) != self.planner.motion_model().control_dim:
            raise InvalidInputError("resolution needs one entry per control axis")

    @property
    def grid_size(self) -> int:
        return int(np.prod(self.resolution))


def control_grid(window, resolution) -> np.ndarray:
    axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(window.lower, window.upper, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def score_grid(state, world: World, goal, cfg: DwaConfig, window):
    """Score every grid command; returns ``(grid, score, admissible)``."""
    pc = cfg.planner
    model = pc.motion_model()
    g = np.asarray(goal, dtype=float)
    grid = control_grid(window, cfg.resolution)
    trajs = rollout_batch(model, state, grid, pc.dt, pc.horizon_steps + 1)
    pos = trajs[:, 1:, : g.shape[0]]
    d = np.linalg.norm(g - pos, axis=-1)
    cost = d.sum(axis=1) + d[:, -1]
    if world.size:
        n, t = pos.shape[:2]
        dist = world.distances(pos.reshape(n * t, -1)).reshape(n, t, -1)
        clearance = dist.min(axis=(1, 2))
        admissible = clearance >= pc.safety.r_safe
    else:
        clearance = np.zeros(len(grid))
        admissible = np.ones(len(grid), dtype=bool)
    speed = np.abs(grid[:, 0]) if model.control_dim == 2 else np.linalg.norm(grid[:, :3], axis=1)
    score = -cfg.w_goal * cost + cfg.w_clearance * clearance + cfg.w_velocity * speed
    return grid, score, admissible


def dwa_plan_step(state, world: World, goal, cfg: DwaConfig, rng=None):
    """Exhaustive grid search over the dynamic window.

    Commands whose full rollout violates a constraint are discarded; the
    best-scoring survivor is returned.  With no survivor the minimum-speed
    command is returned and ``diagnostics.failed`` is set.
    """
    t0 = time.perf_counter()
    pc = cfg.planner
    model = pc.motion_model()
    s = np.asarray(state, dtype=float)
    window = dynamic_window(s, pc.limits, pc.window_time, model)
    grid, score, admissible = score_grid(s, world, goal, cfg, window)
    n_check = pc.validation_steps
    if admissible.any():
        idx = np.flatnonzero(admissible)
        u = grid[idx[lex_argmax(score[idx], grid[idx])]]
        failed, source = False, "grid"
    else:
        u = safest_stop(window)
        failed, source = True, "stop"
    pred = rollout(model, s, u, pc.dt, pc.horizon_steps)
    ok = validate_trajectory(pred[1: n_check + 1], world, pc.safety).feasible
    if not ok and not failed:
        u = safest_stop(window)
        pred = rollout(model, s, u, pc.dt, pc.horizon_steps)
        failed, source = True, "stop"
    if failed:
        ok = validate_trajectory(pred[1: pc.apply_steps + 1], world, pc.safety).feasible
    diag = StepDiagnostics(len(grid), 0, time.perf_counter() - t0, u, pred, ok, failed,
                           source, 1, 0)
    return u, pred, diag


def dwa_run(start, world: World, goal, cfg: DwaConfig) -> PlanResult:
    return run_loop(start, world, goal, cfg.planner,
                    lambda s, rng: dwa_plan_step(s, world, goal, cfg, rng))
