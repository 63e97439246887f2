"""Obstacles, signed distances, collision constraints and world files."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInputError, UnsupportedFeatureError, WorldParseError


def _tup(values) -> tuple:
    return tuple(float(v) for v in values)


# --------------------------------------------------------------------------
# Obstacle primitives
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Circle:
    center: tuple
    radius: float
    kind = "circle"

    def __post_init__(self):
        object.__setattr__(self, "center", _tup(self.center))
        if len(self.center) != 2:
            raise InvalidInputError("circle center must be 2-D")
        if not self.radius > 0:
            raise InvalidInputError(f"circle radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return 2

    def aabb(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def to_dict(self) -> dict:
        return {"type": "circle", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float
    kind = "sphere"

    def __post_init__(self):
        object.__setattr__(self, "center", _tup(self.center))
        if len(self.center) != 3:
            raise InvalidInputError("sphere center must be 3-D")
        if not self.radius > 0:
            raise InvalidInputError(f"sphere radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return 3

    def aabb(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def to_dict(self) -> dict:
        return {"type": "sphere", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in 2-D or 3-D."""

    min_corner: tuple
    max_corner: tuple
    kind = "box"

    def __post_init__(self):
        lo, hi = _tup(self.min_corner), _tup(self.max_corner)
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)
        if len(lo) != len(hi) or len(lo) not in (2, 3):
            raise InvalidInputError("box corners must both be 2-D or both 3-D")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidInputError(f"box min {lo} must be < max {hi} componentwise")

    @property
    def dim(self) -> int:
        return len(self.min_corner)

    def aabb(self):
        return np.array(self.min_corner), np.array(self.max_corner)

    def to_dict(self) -> dict:
        return {"type": "box", "min": list(self.min_corner), "max": list(self.max_corner)}


@dataclass(frozen=True)
class Polygon:
    """Convex 2-D polygon with counter-clockwise vertices."""

    vertices: tuple
    kind = "polygon"

    def __post_init__(self):
        verts = tuple(_tup(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3 or any(len(v) != 2 for v in verts):
            raise InvalidInputError("polygon needs >= 3 two-dimensional vertices")
        v = np.array(verts)
        e = np.roll(v, -1, axis=0) - v
        nxt = np.roll(e, -1, axis=0)
        cross = e[:, 0] * nxt[:, 1] - e[:, 1] * nxt[:, 0]
        if np.any(cross <= 0):
            raise InvalidInputError("polygon must be strictly convex and counter-clockwise")

    @property
    def dim(self) -> int:
        return 2

    def aabb(self):
        v = np.array(self.vertices)
        return v.min(axis=0), v.max(axis=0)

    def to_dict(self) -> dict:
        return {"type": "polygon", "vertices": [list(v) for v in self.vertices]}


Obstacle = Union[Circle, Sphere, Box, Polygon]


# --------------------------------------------------------------------------
# Vectorized signed distances
# --------------------------------------------------------------------------


def _ball_sd(points, centers, radii):
    diff = points[:, None, :] - centers[None, :, :]
    return np.sqrt(np.einsum("nkd,nkd->nk", diff, diff)) - radii[None, :]


def _box_sd(points, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    q = np.abs(points[:, None, :] - center[None]) - half[None]
    outside = np.sqrt(np.sum(np.maximum(q, 0.0) ** 2, axis=-1))
    inside = np.minimum(q.max(axis=-1), 0.0)
    return outside + inside


def _polygon_sd(points, verts):
    """Signed distance to padded convex polygons, ``verts`` shape (P, V, 2)."""
    a = verts[None, :, :, :]
    b = np.roll(verts, -1, axis=1)[None]
    p = points[:, None, None, :]
    e = b - a
    w = p - a
    ee = np.einsum("...d,...d->...", e, e)
    t = np.where(ee > 0, np.einsum("...d,...d->...", w, e) / np.where(ee > 0, ee, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    d = w - t[..., None] * e
    dist = np.sqrt(np.einsum("...d,...d->...", d, d)).min(axis=-1)
    cross = e[..., 0] * w[..., 1] - e[..., 1] * w[..., 0]
    inside = np.all(cross >= 0.0, axis=-1)
    return np.where(inside, -dist, dist)


def signed_distance(point: Sequence[float], obstacle: Obstacle) -> float:
    """Euclidean distance from ``point`` to the obstacle surface, negative inside."""
    p = np.asarray(point, dtype=float)
    if p.ndim != 1 or p.shape[0] != obstacle.dim:
        raise InvalidInputError(
            f"point dimension {p.shape} does not match {obstacle.kind} dimension {obstacle.dim}")
    return float(_obstacle_sd(p[None, :], obstacle)[0])


def _obstacle_sd(points: np.ndarray, ob: Obstacle) -> np.ndarray:
    if isinstance(ob, (Circle, Sphere)):
        return _ball_sd(points, np.array([ob.center]), np.array([ob.radius]))[:, 0]
    if isinstance(ob, Box):
        return _box_sd(points, np.array(ob.min_corner), np.array(ob.max_corner))[:, 0]
    if isinstance(ob, Polygon):
        return _polygon_sd(points, np.array([ob.vertices]))[:, 0]
    raise UnsupportedFeatureError(f"unsupported obstacle {ob!r}")


# --------------------------------------------------------------------------
# Safety
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SafetyConfig:
    r_robot: float = 0.15
    margin: float = 0.05

    def __post_init__(self):
        if self.r_robot < 0 or self.margin < 0:
            raise InvalidInputError("r_robot and margin must be non-negative")

    @property
    def r_safe(self) -> float:
        return self.r_robot + self.margin


def constraint_value(state: Sequence[float], obstacle: Obstacle, safety: SafetyConfig) -> float:
    """Collision constraint ``r_safe - d(position, obstacle)``; satisfied when <= 0."""
    pos = np.asarray(state, dtype=float)[: obstacle.dim]
    return safety.r_safe - signed_distance(pos, obstacle)


# --------------------------------------------------------------------------
# World
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class World:
    bounds_min: tuple
    bounds_max: tuple
    obstacles: tuple = ()
    start: tuple | None = None
    goal: tuple | None = None

    def __post_init__(self):
        lo, hi = _tup(self.bounds_min), _tup(self.bounds_max)
        object.__setattr__(self, "bounds_min", lo)
        object.__setattr__(self, "bounds_max", hi)
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if len(lo) != len(hi) or len(lo) not in (2, 3):
            raise InvalidInputError("world bounds must be 2-D or 3-D")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidInputError("world bounds min must be < max")
        for k, ob in enumerate(self.obstacles):
            if ob.dim != len(lo):
                raise InvalidInputError(
                    f"obstacle {k} ({ob.kind}) is {ob.dim}-D in a {len(lo)}-D world")
        for name in ("start", "goal"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _tup(v))

    @property
    def dimension(self) -> int:
        return len(self.bounds_min)

    @property
    def size(self) -> int:
        return len(self.obstacles)

    def contains(self, point: Sequence[float]) -> bool:
        p = np.asarray(point, dtype=float)[: self.dimension]
        return bool(np.all(p >= self.bounds_min) and np.all(p <= self.bounds_max))

    @cached_property
    def _groups(self):
        groups = []
        by_kind: dict[str, list[int]] = {}
        for k, ob in enumerate(self.obstacles):
            by_kind.setdefault(ob.kind, []).append(k)
        for kind, idx in by_kind.items():
            obs = [self.obstacles[k] for k in idx]
            if kind in ("circle", "sphere"):
                data = (np.array([o.center for o in obs]), np.array([o.radius for o in obs]))
            elif kind == "box":
                data = (np.array([o.min_corner for o in obs]),
                        np.array([o.max_corner for o in obs]))
            else:
                vmax = max(len(o.vertices) for o in obs)
                verts = np.empty((len(obs), vmax, 2))
                for j, o in enumerate(obs):
                    v = np.array(o.vertices)
                    verts[j, : len(v)] = v
                    verts[j, len(v):] = v[0]
                data = (verts,)
            groups.append((kind, np.array(idx), data))
        return groups

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Signed distances, shape ``(n_points, n_obstacles)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))[:, : self.dimension]
        out = np.empty((pts.shape[0], self.size))
        for kind, idx, data in self._groups:
            if kind in ("circle", "sphere"):
                out[:, idx] = _ball_sd(pts, *data)
            elif kind == "box":
                out[:, idx] = _box_sd(pts, *data)
            else:
                out[:, idx] = _polygon_sd(pts, *data)
        return out

    def constraint_values(self, states: np.ndarray, safety: SafetyConfig) -> np.ndarray:
        """``r_safe - distance`` for every state x obstacle."""
        return safety.r_safe - self.distances(states)

    @cached_property
    def bvh(self):
        from .bvh import AabbTree

        return AabbTree([ob.aabb() for ob in self.obstacles])

    def to_dict(self) -> dict:
        d = {
            "dimension": self.dimension,
            "bounds": {"min": list(self.bounds_min), "max": list(self.bounds_max)},
            "obstacles": [ob.to_dict() for ob in self.obstacles],
        }
        if self.start is not None:
            d["start"] = list(self.start)
        if self.goal is not None:
            d["goal"] = list(self.goal)
        return d


# --------------------------------------------------------------------------
# Trajectory validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    feasible: bool
    first_violation: tuple | None = None
    max_constraint: float = float("-inf")
    bvh_nodes_visited: int = 0


def validate_trajectory(trajectory: np.ndarray, world: World, safety: SafetyConfig,
                        use_bvh: bool = False) -> ValidationReport:
    """Check every state against every obstacle.

    ``first_violation`` is the lexicographically first ``(step, obstacle)``
    pair whose constraint value is positive.
    """
    traj = np.atleast_2d(np.asarray(trajectory, dtype=float))
    if traj.shape[0] == 0:
        raise InvalidInputError("trajectory must be non-empty")
    if world.size == 0:
        return ValidationReport(True)
    if not use_bvh:
        c = world.constraint_values(traj, safety)
        bad = np.argwhere(c > 0.0)
        first = (int(bad[0, 0]), int(bad[0, 1])) if len(bad) else None
        return ValidationReport(first is None, first, float(c.max()))
    visited = 0
    worst = float("-inf")
    pts = traj[:, : world.dimension]
    for step, p in enumerate(pts):
        cand, n = world.bvh.query(p, safety.r_safe)
        visited += n
        if not cand:
            continue
        cand = sorted(cand)
        d = np.array([_obstacle_sd(p[None], world.obstacles[k])[0] for k in cand])
        c = safety.r_safe - d
        worst = max(worst, float(c.max()))
        hits = np.flatnonzero(c > 0.0)
        if len(hits):
            return ValidationReport(False, (step, cand[hits[0]]), worst, visited)
    return ValidationReport(True, None, worst, visited)


# --------------------------------------------------------------------------
# World files
# --------------------------------------------------------------------------


def _num_list(value, path: str, length: int | None = None) -> list:
    if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise WorldParseError("expected a list of numbers", path)
    if length is not None and len(value) != length:
        raise WorldParseError(f"expected {length} numbers, got {len(value)}", path)
    return value


def _number(value, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise WorldParseError("expected a number", path)
    return float(value)


def obstacle_from_dict(d: dict, path: str = "obstacle") -> Obstacle:
    if not isinstance(d, dict):
        raise WorldParseError("expected an object", path)
    kind = d.get("type")
    try:
        if kind == "circle":
            return Circle(_num_list(d.get("center"), f"{path}.center", 2),
                          _number(d.get("radius"), f"{path}.radius"))
        if kind == "sphere":
            return Sphere(_num_list(d.get("center"), f"{path}.center", 3),
                          _number(d.get("radius"), f"{path}.radius"))
        if kind == "box":
            lo = _num_list(d.get("min"), f"{path}.min")
            return Box(lo, _num_list(d.get("max"), f"{path}.max", len(lo)))
        if kind == "polygon":
            verts = d.get("vertices")
            if not isinstance(verts, list):
                raise WorldParseError("expected a list of vertices", f"{path}.vertices")
            return Polygon([_num_list(v, f"{path}.vertices[{i}]", 2) for i, v in enumerate(verts)])
    except InvalidInputError as exc:
        raise WorldParseError(str(exc), path) from exc
    raise UnsupportedFeatureError(f"unknown obstacle type {kind!r}", f"{path}.type")


def world_from_dict(d: dict) -> World:
    if not isinstance(d, dict):
        raise WorldParseError("world document must be a JSON object")
    dim = d.get("dimension")
    if dim not in (2, 3):
        raise WorldParseError("must be 2 or 3", "dimension")
    bounds = d.get("bounds")
    if not isinstance(bounds, dict):
        raise WorldParseError("expected an object with min/max", "bounds")
    lo = _num_list(bounds.get("min"), "bounds.min", dim)
    hi = _num_list(bounds.get("max"), "bounds.max", dim)
    raw = d.get("obstacles", [])
    if not isinstance(raw, list):
        raise WorldParseError("expected a list", "obstacles")
    obstacles = [obstacle_from_dict(o, f"obstacles[{i}]") for i, o in enumerate(raw)]
    start = _num_list(d["start"], "start") if d.get("start") is not None else None
    goal = _num_list(d["goal"], "goal") if d.get("goal") is not None else None
    try:
        return World(lo, hi, obstacles, start, goal)
    except InvalidInputError as exc:
        raise WorldParseError(str(exc), "obstacles") from exc


def load_world(path: str | os.PathLike) -> World:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorldParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    return world_from_dict(doc)


def save_world(world: World, path: str | os.PathLike) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(world.to_dict(), fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)
