"""Scenario files: world source, endpoints, planner choice and overrides.

A scenario is a JSON object::

    {
      "name": "env1",
      "world": {"generator": "box_field", "params": {"count": 20}},
      "seed": 0,
      "start": [3, 3],
      "goal": [12.9, 12.9],
      "planner": "bow",
      "planner_config": {"goal_radius": 0.3},
      "dwa_config": {"resolution": [20, 20]},
      "mandatory": true,
      "min_success_rate": 0.9
    }

``world`` is either ``{"file": path}`` (relative to the scenario file) or a
generator spec.  The seed drives the world generator and the planner unless
``world_seed`` pins the world.  Start and goal default to the world's own.
A start given as a bare position is padded to a rest state; unicycle starts
then face the goal.
"""

from __future__ import annotations

import csv
import dataclasses
import inspect
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .. import environments
from ..dwa import DwaConfig, dwa_plan_step
from ..errors import GenerationError, InvalidInputError, WorldParseError
from ..planner import PlannerConfig, PlanResult, plan_step, run_loop
from ..world import World, load_world, obstacle_from_dict, validate_trajectory
from .metrics import JERK_DEFINITION, TIMING_SCOPE, MetricsRecord, compute_metrics

PLANNERS = ("bow", "dwa")

GENERATORS = {
    "box_field": environments.generate_box_field,
    "poisson_forest": environments.generate_poisson_forest,
    "bugtrap": environments.generate_bugtrap,
    "triangle_clusters": environments.generate_triangle_clusters,
}


class ScenarioError(Exception):
    """A scenario could not be built or run; carries the scenario name."""

    def __init__(self, name: str, message: str):
        super().__init__(f"scenario {name!r}: {message}")
        self.name = name


@dataclass(frozen=True)
class Scenario:
    name: str
    world: dict
    seed: int = 0
    start: tuple | None = None
    goal: tuple | None = None
    planner: str = "bow"
    planner_config: dict = field(default_factory=dict)
    dwa_config: dict = field(default_factory=dict)
    mandatory: bool = True
    min_success_rate: float = 1.0
    world_seed: int | None = None
    base_dir: str = "."

    def __post_init__(self):
        if self.planner not in PLANNERS:
            raise InvalidInputError(f"planner must be one of {PLANNERS}, got {self.planner!r}")
        if not isinstance(self.world, dict) or not ("file" in self.world
                                                    or "generator" in self.world):
            raise InvalidInputError("world needs a 'file' or a 'generator' entry")
        if not 0.0 <= self.min_success_rate <= 1.0:
            raise InvalidInputError("min_success_rate must lie in [0, 1]")
        gen = self.world.get("generator")
        if gen is not None and gen not in GENERATORS:
            raise InvalidInputError(f"unknown generator {gen!r}; known: {sorted(GENERATORS)}")

    def with_overrides(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | os.PathLike = ".") -> "Scenario":
        if not isinstance(d, dict):
            raise InvalidInputError("scenario must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise InvalidInputError(f"unknown scenario keys: {sorted(unknown)}")
        if "name" not in d or "world" not in d:
            raise InvalidInputError("scenario needs 'name' and 'world'")
        kw = dict(d)
        for key in ("start", "goal"):
            if kw.get(key) is not None:
                kw[key] = tuple(float(x) for x in kw[key])
        kw["seed"] = int(kw.get("seed", 0))
        return cls(base_dir=str(base_dir), **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        for key in ("start", "goal"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


def load_scenario(path: str | os.PathLike) -> Scenario:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}")
    return Scenario.from_dict(doc, p.parent)


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------


def build_world(scn: Scenario) -> World:
    spec = scn.world
    try:
        if "file" in spec:
            path = Path(spec["file"])
            world = load_world(path if path.is_absolute() else Path(scn.base_dir) / path)
        else:
            fn = GENERATORS[spec["generator"]]
            params = dict(spec.get("params", {}))
            if "seed" in inspect.signature(fn).parameters:
                params["seed"] = scn.seed if scn.world_seed is None else scn.world_seed
            world = fn(**params)
        extra = spec.get("extra_obstacles", [])
        if extra:
            obs = [obstacle_from_dict(o, f"world.extra_obstacles[{i}]")
                   for i, o in enumerate(extra)]
            world = World(world.bounds_min, world.bounds_max, list(world.obstacles) + obs,
                          world.start, world.goal)
    except (GenerationError, WorldParseError, InvalidInputError, OSError, TypeError) as exc:
        raise ScenarioError(scn.name, f"world construction failed: {exc}") from exc
    return world


def planner_config(scn: Scenario) -> PlannerConfig:
    d = dict(scn.planner_config)
    d["seed"] = scn.seed
    try:
        return PlannerConfig.from_dict(d)
    except (InvalidInputError, TypeError, ValueError) as exc:
        raise ScenarioError(scn.name, f"bad planner_config: {exc}") from exc


def dwa_config(scn: Scenario, pc: PlannerConfig) -> DwaConfig:
    d = dict(scn.dwa_config)
    if "resolution" in d:
        d["resolution"] = tuple(d["resolution"])
    try:
        return DwaConfig(planner=pc, **d)
    except (InvalidInputError, TypeError) as exc:
        raise ScenarioError(scn.name, f"bad dwa_config: {exc}") from exc


def endpoints(scn: Scenario, world: World, pc: PlannerConfig):
    """Full start state and goal position for the scenario."""
    goal = scn.goal if scn.goal is not None else world.goal
    start = scn.start if scn.start is not None else world.start
    if goal is None or start is None:
        raise ScenarioError(scn.name, "start and goal must be given by the scenario or world")
    model = pc.motion_model()
    g = np.asarray(goal, dtype=float)[: world.dimension]
    s = np.asarray(start, dtype=float)
    if s.shape[0] == world.dimension and s.shape[0] < model.state_dim:
        pos = s
        s = np.zeros(model.state_dim)
        s[: pos.shape[0]] = pos
        if model.name == "unicycle":
            s[2] = math.atan2(g[1] - pos[1], g[0] - pos[0])
    if np.allclose(s[: world.dimension], g):
        raise ScenarioError(scn.name, "start and goal coincide")
    return s, g


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------


@dataclass
class ScenarioOutcome:
    scenario: Scenario
    world: World
    result: PlanResult
    metrics: MetricsRecord
    timings: list


def run_scenario(scn: Scenario, out_dir: str | os.PathLike | None = None,
                 clock: Callable[[], float] = time.perf_counter) -> ScenarioOutcome:
    """Build, plan, measure and (optionally) write artifacts for one scenario.

    ``clock`` times each planning round; injecting a deterministic clock
    makes every written byte reproducible.
    """
    world = build_world(scn)
    pc = planner_config(scn)
    start, goal = endpoints(scn, world, pc)
    if scn.planner == "bow":
        def step(s, rng):
            return plan_step(s, world, goal, pc, rng)
    else:
        dc = dwa_config(scn, pc)

        def step(s, rng):
            return dwa_plan_step(s, world, goal, dc, rng)

    timings: list[float] = []

    def timed(s, rng):
        t0 = clock()
        out = step(s, rng)
        timings.append(clock() - t0)
        return out

    try:
        result = run_loop(start, world, goal, pc, timed)
    except InvalidInputError as exc:
        raise ScenarioError(scn.name, str(exc)) from exc
    report = validate_trajectory(result.trajectory, world, pc.safety)
    metrics = compute_metrics(result, timings, report.max_constraint)
    outcome = ScenarioOutcome(scn, world, result, metrics, timings)
    if out_dir is not None:
        write_artifacts(outcome, out_dir)
    return outcome


def _fmt(x: float) -> str:
    return repr(float(x))


def trajectory_csv(result: PlanResult) -> str:
    """Executed states with the control applied from each state onward."""
    traj = result.trajectory
    n_state = traj.shape[1]
    n_ctrl = result.controls.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "t"] + [f"x{i}" for i in range(n_state)]
               + [f"u{i}" for i in range(n_ctrl)])
    for k, s in enumerate(traj):
        u = result.controls[k] if k < len(result.controls) else [None] * n_ctrl
        w.writerow([k, _fmt(k * result.dt)] + [_fmt(v) for v in s]
                   + ["" if v is None else _fmt(v) for v in u])
    return buf.getvalue()


def read_trajectory_csv(path: str | os.PathLike):
    """Inverse of :func:`trajectory_csv`: ``(dt, states, controls)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    xs = [i for i, h in enumerate(header) if h.startswith("x")]
    us = [i for i, h in enumerate(header) if h.startswith("u")]
    states = np.array([[float(r[i]) for i in xs] for r in body])
    controls = np.array([[float(r[i]) for i in us] for r in body if r[us[0]] != ""])
    dt = float(body[1][1]) if len(body) > 1 else float("nan")
    return dt, states, controls.reshape(-1, len(us))


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def metrics_document(outcome: ScenarioOutcome) -> dict:
    r = outcome.result
    return {
        "scenario": outcome.scenario.to_dict(),
        "metrics": outcome.metrics.to_dict(),
        "goal": [float(v) for v in r.goal],
        "dt": r.dt,
        "model": r.model.name,
        "v_max": float(np.max(planner_config(outcome.scenario).limits.v_max)),
        "definitions": {"avg_jerk": JERK_DEFINITION, "timing": TIMING_SCOPE},
    }


def write_artifacts(outcome: ScenarioOutcome, out_dir: str | os.PathLike) -> Path:
    out = Path(out_dir)
    atomic_write(out / "trajectory.csv", trajectory_csv(outcome.result))
    atomic_write(out / "metrics.json",
                 json.dumps(metrics_document(outcome), indent=1, sort_keys=True) + "\n")
    atomic_write(out / "world.json",
                 json.dumps(outcome.world.to_dict(), indent=1, sort_keys=True) + "\n")
    return out


def load_result_dir(path: str | os.PathLike):
    """Read back ``(world, states, metrics document)`` written by a run."""
    p = Path(path)
    world = load_world(p / "world.json")
    doc = json.loads((p / "metrics.json").read_text(encoding="utf-8"))
    _, states, _ = read_trajectory_csv(p / "trajectory.csv")
    return world, states, doc
