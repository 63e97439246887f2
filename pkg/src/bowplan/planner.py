"""Receding-horizon control selection by constrained Bayesian optimization.

Each planning round works inside the dynamic window of reachable commands:
a handful of controls are rolled out and scored (cost-to-go plus one
collision constraint per obstacle), GP surrogates are fitted to those
scores, and the recommended command (see :func:`recommend`) is rolled out,
validated and held for ``apply_steps`` integration steps.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .acquisition import AcquisitionContext, lex_argmax, low_discrepancy, maximize_cei
from .errors import InvalidInputError
from .gp import default_lengthscales, fit_hyperparams, gp_fit, gp_fit_shared
from .kinematics import (ControlWindow, KinodynamicLimits, MotionModel, dynamic_window,
                         make_model, rollout)
from .world import SafetyConfig, World, validate_trajectory

GOAL_REACHED = "goal-reached"
STEP_LIMIT = "step-limit"
RESAMPLE_EXHAUSTED = "resample-exhausted"


@dataclass(frozen=True)
class PlannerConfig:
    dt: float = 0.1
    horizon_steps: int = 30
    apply_steps: int = 7
    goal_radius: float = 0.3
    sample_budget: int = 5
    init_samples: int = 3
    max_resample_rounds: int = 10
    candidate_budget: int = 256
    limits: KinodynamicLimits = field(default_factory=KinodynamicLimits)
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    seed: int = 0
    model: str = "unicycle"
    tau_w: float | None = None
    max_rounds: int = 5000
    constraint_mode: str = "rollout"      # or "next-state"
    hyperparam_mode: str = "fixed"        # or "ml2"
    k_track: float = 5.0
    validation: str = "full"              # or "apply"
    recommendation: str = "guarded"       # or "cei"

    def __post_init__(self):
        if not 1 <= self.apply_steps <= self.horizon_steps:
            raise InvalidInputError("need 1 <= apply_steps <= horizon_steps")
        if not 1 <= self.init_samples <= self.sample_budget:
            raise InvalidInputError("need 1 <= init_samples <= sample_budget")
        if not self.goal_radius > 0:
            raise InvalidInputError("goal_radius must be positive")
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if self.max_resample_rounds < 0 or self.max_rounds < 1 or self.candidate_budget < 1:
            raise InvalidInputError("invalid round or candidate budget")
        if self.constraint_mode not in ("rollout", "next-state"):
            raise InvalidInputError(f"unknown constraint_mode {self.constraint_mode!r}")
        if self.hyperparam_mode not in ("fixed", "ml2"):
            raise InvalidInputError(f"unknown hyperparam_mode {self.hyperparam_mode!r}")
        if self.validation not in ("full", "apply"):
            raise InvalidInputError(f"unknown validation mode {self.validation!r}")
        if self.recommendation not in ("guarded", "cei"):
            raise InvalidInputError(f"unknown recommendation mode {self.recommendation!r}")

    @property
    def validation_steps(self) -> int:
        """Number of predicted states checked before a command is accepted."""
        return self.horizon_steps if self.validation == "full" else self.apply_steps

    @property
    def window_time(self) -> float:
        return self.tau_w if self.tau_w is not None else self.apply_steps * self.dt

    def motion_model(self) -> MotionModel:
        return make_model(self.model, self.limits, self.k_track)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["limits"] = self.limits.to_dict()
        d["safety"] = dataclasses.asdict(self.safety)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        d = dict(d)
        if isinstance(d.get("limits"), dict):
            d["limits"] = KinodynamicLimits.from_dict(d["limits"])
        if isinstance(d.get("safety"), dict):
            d["safety"] = SafetyConfig(**d["safety"])
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidInputError(f"unknown planner options: {sorted(unknown)}")
        return cls(**d)


@dataclass
class StepDiagnostics:
    evaluations: int
    resample_rounds: int
    wall_time: float
    u_star: np.ndarray
    predicted: np.ndarray
    feasible: bool
    failed: bool = False
    source: str = "cei"
    sampling_rounds: int = 1
    max_training_size: int = 0


@dataclass
class PlanResult:
    trajectory: np.ndarray
    controls: np.ndarray
    success: bool
    diagnostics: list
    termination: str
    goal: np.ndarray
    dt: float
    model: MotionModel

    @property
    def steps(self) -> int:
        return self.trajectory.shape[0] - 1

    @property
    def planning_rounds(self) -> int:
        return len(self.diagnostics)


# --------------------------------------------------------------------------
# Objective and constraints
# --------------------------------------------------------------------------


def _positions(states: np.ndarray, goal: np.ndarray) -> np.ndarray:
    return states[..., : goal.shape[0]]


def _cost_from_rollout(traj: np.ndarray, goal: np.ndarray) -> float:
    d = np.linalg.norm(goal - _positions(traj[1:], goal), axis=-1)
    return float(d.sum() + d[-1])


def cost_to_go(state: Sequence[float], u: Sequence[float], goal: Sequence[float],
               cfg: PlannerConfig) -> float:
    """Sum of goal distances over a fixed-control rollout plus a terminal term.

    The rollout has ``horizon_steps + 1`` steps; every predicted position
    contributes a stage cost and the last one is counted again as the
    terminal cost.
    """
    g = np.asarray(goal, dtype=float)
    traj = rollout(cfg.motion_model(), state, u, cfg.dt, cfg.horizon_steps + 1)
    return _cost_from_rollout(traj, g)


def evaluate_sample(state, u, world: World, goal, cfg: PlannerConfig,
                    model: MotionModel | None = None):
    """Objective and per-obstacle constraint values for one control.

    Constraint ``k`` is the worst ``r_safe - distance`` to obstacle ``k``
    over the predicted states (or at the first predicted state only when
    ``cfg.constraint_mode == "next-state"``).
    """
    model = model or cfg.motion_model()
    g = np.asarray(goal, dtype=float)
    traj = rollout(model, state, u, cfg.dt, cfg.horizon_steps + 1)
    objective = _cost_from_rollout(traj, g)
    if world.size == 0:
        return objective, np.zeros(0)
    states = traj[1:2] if cfg.constraint_mode == "next-state" else traj[1:]
    c = world.constraint_values(states, cfg.safety).max(axis=0)
    return objective, c


# --------------------------------------------------------------------------
# One planning round
# --------------------------------------------------------------------------


def _context(X, Y, C, window: ControlWindow, cfg: PlannerConfig) -> AcquisitionContext:
    X = np.asarray(X)
    Y = np.asarray(Y)
    ls = default_lengthscales(window.width)
    if cfg.hyperparam_mode == "ml2" and len(Y) > 1:
        h = fit_hyperparams(X, Y, window.width)
        objective = gp_fit((X, Y), h)
    else:
        objective = gp_fit_shared(X, Y[:, None], ls)
    constraints = []
    C = np.asarray(C).reshape(len(Y), -1)
    if C.shape[1]:
        constraints.append(gp_fit_shared(X, C, ls))
        feasible = np.all(C <= 0.0, axis=1)
    else:
        feasible = np.ones(len(Y), dtype=bool)
    y_minus = float(Y[feasible].min()) if feasible.any() else None
    return AcquisitionContext(objective, constraints, y_minus, window)


def optimize_window(state, world: World, goal, cfg: PlannerConfig, window: ControlWindow,
                    budget: int, seed, model: MotionModel | None = None):
    """Sequential CBO inside ``window`` with ``budget`` true evaluations.

    Returns ``(X, Y, C, context)``: evaluated controls, objectives,
    constraint vectors, and the acquisition context fitted to all of them.
    """
    model = model or cfg.motion_model()
    rng = np.random.default_rng(seed)
    p0 = min(cfg.init_samples, budget)
    X, Y, C = [], [], []
    for u in low_discrepancy(window, p0, rng):
        y, c = evaluate_sample(state, u, world, goal, cfg, model)
        X.append(u), Y.append(y), C.append(c)
    for _ in range(budget - p0):
        ctx = _context(X, Y, C, window, cfg)
        u = maximize_cei(ctx, cfg.candidate_budget, rng)
        y, c = evaluate_sample(state, u, world, goal, cfg, model)
        X.append(u), Y.append(y), C.append(c)
    return np.array(X), np.array(Y), np.array(C).reshape(len(Y), -1), _context(X, Y, C, window, cfg)


def recommend(X, Y, C, ctx: AcquisitionContext, cfg: PlannerConfig, seed) -> np.ndarray:
    """Command recommended after a round of evaluations.

    The continuous CEI argmax is kept when the surrogates predict it to be
    feasible and no worse than the incumbent; otherwise the best feasible
    evaluated sample is returned.  ``cfg.recommendation == "cei"`` always
    returns the CEI argmax.
    """
    u = maximize_cei(ctx, cfg.candidate_budget, seed)
    feasible = np.all(C <= 0.0, axis=1)
    if cfg.recommendation == "cei" or not feasible.any():
        return u
    mean, _ = ctx.objective_model.predict(u[None])
    cm, _ = ctx.constraint_posteriors(u[None])
    if mean[0, 0] <= ctx.y_minus and np.all(cm <= 0.0):
        return u
    idx = np.flatnonzero(feasible)
    return X[idx[lex_argmax(-Y[idx], X[idx])]]


def safest_stop(window: ControlWindow) -> np.ndarray:
    """Command of minimum magnitude per axis inside the window."""
    return window.clip(np.zeros(window.dim))


def plan_step(state, world: World, goal, cfg: PlannerConfig, rng: np.random.Generator):
    """Select the command for the next ``apply_steps`` integration steps.

    Returns ``(u_star, predicted_trajectory, diagnostics)``.  The predicted
    trajectory has ``horizon_steps + 1`` states; the first
    ``cfg.validation_steps`` of them after the current state are validated
    before it is accepted.
    """
    t0 = time.perf_counter()
    model = cfg.motion_model()
    s = np.asarray(state, dtype=float)
    window = dynamic_window(s, cfg.limits, cfg.window_time, model)
    n_check = cfg.validation_steps
    evaluations = 0

    def valid(pred, n=n_check):
        return validate_trajectory(pred[1: n + 1], world, cfg.safety).feasible

    for round_i in range(1 + cfg.max_resample_rounds):
        X, Y, C, ctx = optimize_window(s, world, goal, cfg, window, cfg.sample_budget,
                                       rng.integers(2 ** 63), model)
        evaluations += len(Y)
        u_star = recommend(X, Y, C, ctx, cfg, rng.integers(2 ** 63))
        pred = rollout(model, s, u_star, cfg.dt, cfg.horizon_steps)
        source = "cei"
        if not valid(pred):
            feasible = np.all(C <= 0.0, axis=1)
            if not feasible.any():
                continue
            idx = np.flatnonzero(feasible)
            best = idx[lex_argmax(-Y[idx], X[idx])]
            u_star = X[best]
            pred = rollout(model, s, u_star, cfg.dt, cfg.horizon_steps)
            source = "best-sample"
            if not valid(pred):
                continue
        diag = StepDiagnostics(evaluations, round_i, time.perf_counter() - t0, u_star, pred,
                               True, False, source, round_i + 1, len(Y))
        return u_star, pred, diag

    u_star = safest_stop(window)
    pred = rollout(model, s, u_star, cfg.dt, cfg.horizon_steps)
    diag = StepDiagnostics(evaluations, cfg.max_resample_rounds, time.perf_counter() - t0,
                           u_star, pred, valid(pred, cfg.apply_steps), True, "stop",
                           cfg.max_resample_rounds + 1, cfg.sample_budget)
    return u_star, pred, diag


# --------------------------------------------------------------------------
# Full run
# --------------------------------------------------------------------------


def _goal_distance(state: np.ndarray, goal: np.ndarray) -> float:
    return float(np.linalg.norm(state[: goal.shape[0]] - goal))


def check_start(start: np.ndarray, world: World, goal: np.ndarray, cfg: PlannerConfig) -> None:
    model = cfg.motion_model()
    if start.shape != (model.state_dim,):
        raise InvalidInputError(f"{model.name} start state must have {model.state_dim} entries")
    if goal.shape != (world.dimension,):
        raise InvalidInputError(f"goal must be {world.dimension}-D")
    if not world.contains(start) or not world.contains(goal):
        raise InvalidInputError("start and goal must lie inside the world bounds")
    if not validate_trajectory(start[None, :], world, cfg.safety).feasible:
        raise InvalidInputError("start state violates a collision constraint")


def run_loop(start, world: World, goal, cfg: PlannerConfig, step_fn) -> PlanResult:
    """Shared receding-horizon loop; ``step_fn(state, rng)`` chooses each command."""
    s = np.asarray(start, dtype=float)
    g = np.asarray(goal, dtype=float)
    check_start(s, world, g, cfg)
    rng = np.random.default_rng(cfg.seed)
    traj = [s]
    controls: list[np.ndarray] = []
    diags: list = []
    termination = STEP_LIMIT
    if _goal_distance(s, g) <= cfg.goal_radius:
        termination = GOAL_REACHED
    else:
        for _ in range(cfg.max_rounds):
            u, pred, d = step_fn(s, rng)
            diags.append(d)
            if d.failed and not d.feasible:
                termination = RESAMPLE_EXHAUSTED
                break
            for i in range(1, cfg.apply_steps + 1):
                s = pred[i]
                traj.append(s)
                controls.append(np.array(u, dtype=float))
                if _goal_distance(s, g) <= cfg.goal_radius:
                    termination = GOAL_REACHED
                    break
            if termination == GOAL_REACHED:
                break
    cdim = cfg.motion_model().control_dim
    return PlanResult(np.array(traj), np.array(controls).reshape(-1, cdim),
                      termination == GOAL_REACHED, diags, termination, g, cfg.dt,
                      cfg.motion_model())


def run(start, world: World, goal, cfg: PlannerConfig) -> PlanResult:
    """Plan and execute until the goal radius is reached or the run gives up."""
    return run_loop(start, world, goal, cfg,
                    lambda s, rng: plan_step(s, world, goal, cfg, rng))


def replay(result: PlanResult, start) -> np.ndarray:
    """Re-integrate the applied controls from ``start``."""
    model = result.model
    states = [np.asarray(start, dtype=float)]
    for u in result.controls:
        states.append(rollout(model, states[-1], u, result.dt, 1)[1])
    return np.array(states)
