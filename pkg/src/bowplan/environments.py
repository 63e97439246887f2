"""Procedural environment generators.

Every generator is a pure function of its arguments: the same seed and
parameters always give an identical :class:`~bowplan.world.World`.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import GenerationError
from .world import Box, Circle, Polygon, World

DEFAULT_BOUNDS = ((0.0, 0.0), (20.0, 20.0))


def _check_endpoints(bounds, start, goal):
    lo, hi = np.asarray(bounds[0], float), np.asarray(bounds[1], float)
    for name, p in (("start", start), ("goal", goal)):
        p = np.asarray(p, float)[: len(lo)]
        if np.any(p < lo) or np.any(p > hi):
            raise GenerationError(f"{name} {tuple(p)} lies outside the bounds")
    return lo, hi


def _box_clear(lo, hi, point, clearance) -> bool:
    p = np.asarray(point, float)[: len(lo)]
    d = np.maximum(np.maximum(lo - p, p - hi), 0.0)
    return float(np.linalg.norm(d)) >= clearance


def generate_box_field(seed: int, bounds=DEFAULT_BOUNDS, count: int = 20,
                       size_range: Sequence[float] = (0.6, 1.4),
                       start: Sequence[float] = (3.0, 3.0),
                       goal: Sequence[float] = (12.55, 12.55),
                       clearance: float = 1.0, min_gap: float = 0.3,
                       max_attempts: int | None = None) -> World:
    """Square obstacles placed by rejection sampling.

    Boxes stay inside the bounds, keep ``clearance`` from start and goal and
    at least ``min_gap`` from each other.
    """
    lo, hi = _check_endpoints(bounds, start, goal)
    if count < 0:
        raise GenerationError("count must be non-negative")
    smin, smax = map(float, size_range)
    if not 0 < smin <= smax:
        raise GenerationError(f"invalid size range {size_range}")
    rng = np.random.default_rng(seed)
    max_attempts = max_attempts if max_attempts is not None else 200 * max(count, 1)
    boxes: list[Box] = []
    attempts = 0
    while len(boxes) < count:
        attempts += 1
        if attempts > max_attempts:
            raise GenerationError(
                f"placed {len(boxes)}/{count} boxes after {max_attempts} attempts")
        side = rng.uniform(smin, smax)
        c = rng.uniform(lo + side / 2, hi - side / 2)
        blo, bhi = c - side / 2, c + side / 2
        if not (_box_clear(blo, bhi, start, clearance) and _box_clear(blo, bhi, goal, clearance)):
            continue
        if any(np.all(blo < np.array(b.max_corner) + min_gap)
               and np.all(bhi > np.array(b.min_corner) - min_gap) for b in boxes):
            continue
        boxes.append(Box(blo, bhi))
    return World(lo, hi, boxes, tuple(start[:len(lo)]), tuple(goal[:len(lo)]))


def generate_poisson_forest(seed: int, bounds=DEFAULT_BOUNDS, density: float = 1.5,
                            radius_range: Sequence[float] = (0.05, 0.1),
                            start: Sequence[float] = (1.0, 1.0),
                            goal: Sequence[float] = (19.0, 19.0),
                            clearance: float = 0.5,
                            region: tuple | None = None) -> World:
    """Circular trees placed by a homogeneous Poisson process.

    Trees whose surface comes within ``clearance`` of the start or goal are
    removed (independent thinning), so the observed count is Poisson with
    mean ``density * free_area``.  ``region`` optionally restricts the
    process to a sub-box ``((xmin, ymin), (xmax, ymax))`` of the bounds.
    """
    lo, hi = _check_endpoints(bounds, start, goal)
    if not density >= 0:
        raise GenerationError("density must be non-negative")
    rmin, rmax = map(float, radius_range)
    if not 0 < rmin <= rmax:
        raise GenerationError(f"invalid radius range {radius_range}")
    rlo, rhi = (lo, hi) if region is None else (np.asarray(region[0], float),
                                                np.asarray(region[1], float))
    rng = np.random.default_rng(seed)
    area = float(np.prod(rhi - rlo))
    n = int(rng.poisson(density * area))
    centers = rng.uniform(rlo, rhi, size=(n, 2))
    radii = rng.uniform(rmin, rmax, size=n)
    s = np.asarray(start, float)[:2]
    g = np.asarray(goal, float)[:2]
    keep = ((np.linalg.norm(centers - s, axis=1) - radii >= clearance)
            & (np.linalg.norm(centers - g, axis=1) - radii >= clearance))
    trees = [Circle(c, r) for c, r, k in zip(centers, radii, keep) if k]
    return World(lo, hi, trees, tuple(s), tuple(g))


def generate_bugtrap(opening_width: float = 1.2, wall_thickness: float = 0.3,
                     trap_size: float = 4.0, start: Sequence[float] | None = None,
                     goal: Sequence[float] | None = None, r_safe: float = 0.2,
                     bounds=DEFAULT_BOUNDS) -> World:
    """C-shaped enclosure of five wall boxes with one opening.

    The trap is centered in the bounds.  The back wall faces the goal (+x
    side) and the opening is centered in the front (-x) wall, so the straight
    start-to-goal segment always hits the back wall.
    """
    if not wall_thickness > 0:
        raise GenerationError("wall thickness must be positive")
    if not opening_width > 2 * r_safe:
        raise GenerationError(
            f"opening {opening_width} must exceed 2*r_safe = {2 * r_safe}")
    if not trap_size > opening_width:
        raise GenerationError("trap size must exceed the opening width")
    lo, hi = np.asarray(bounds[0], float), np.asarray(bounds[1], float)
    cx, cy = 0.5 * (lo + hi)
    h = trap_size / 2
    t = wall_thickness
    if start is None:
        start = (cx, cy)
    if goal is None:
        goal = (cx + h + t + 4.0, cy)
    _check_endpoints(bounds, start, goal)
    o = opening_width / 2
    walls = [
        Box((cx + h, cy - h - t), (cx + h + t, cy + h + t)),   # back
        Box((cx - h - t, cy + h), (cx + h, cy + h + t)),       # top
        Box((cx - h - t, cy - h - t), (cx + h, cy - h)),       # bottom
        Box((cx - h - t, cy + o), (cx - h, cy + h)),           # front, upper part
        Box((cx - h - t, cy - h), (cx - h, cy - o)),           # front, lower part
    ]
    sx, sy = start[0], start[1]
    if not (cx - h < sx < cx + h and cy - h < sy < cy + h):
        raise GenerationError("start must lie inside the trap")
    gx, gy = goal[0], goal[1]
    if cx - h - t <= gx <= cx + h + t and cy - h - t <= gy <= cy + h + t:
        raise GenerationError("goal must lie outside the trap")
    return World(lo, hi, walls, (sx, sy), (gx, gy))


def _triangle(center, size, angle):
    verts = [(center[0] + size * math.cos(angle + k * 2 * math.pi / 3),
              center[1] + size * math.sin(angle + k * 2 * math.pi / 3)) for k in range(3)]
    return Polygon(verts)


def generate_triangle_clusters(seed: int, bounds=DEFAULT_BOUNDS, clusters: int = 8,
                               triangles_per_cluster: int = 4,
                               triangle_size: float = 0.5, spread: float = 0.6,
                               start: Sequence[float] = (5.0, 5.0),
                               goal: Sequence[float] = (11.0, 11.0),
                               clearance: float = 1.0,
                               region: tuple | None = None,
                               max_attempts: int | None = None) -> World:
    """Non-convex obstacles built as clusters of overlapping triangles.

    Each cluster is a union of convex triangles; the distance to a cluster is
    the minimum over its members, which falls out of treating every triangle
    as its own obstacle.
    """
    lo, hi = _check_endpoints(bounds, start, goal)
    rlo, rhi = (lo, hi) if region is None else (np.asarray(region[0], float),
                                                np.asarray(region[1], float))
    rng = np.random.default_rng(seed)
    reach = spread + triangle_size
    max_attempts = max_attempts if max_attempts is not None else 200 * max(clusters, 1)
    tris: list[Polygon] = []
    placed = attempts = 0
    s, g = np.asarray(start, float)[:2], np.asarray(goal, float)[:2]
    while placed < clusters:
        attempts += 1
        if attempts > max_attempts:
            raise GenerationError(
                f"placed {placed}/{clusters} clusters after {attempts - 1} attempts")
        c = rng.uniform(rlo + reach, rhi - reach)
        if min(np.linalg.norm(c - s), np.linalg.norm(c - g)) < reach + clearance:
            continue
        members = []
        for _ in range(triangles_per_cluster):
            off = rng.uniform(-spread, spread, size=2)
            members.append(_triangle(c + off, triangle_size, rng.uniform(0, 2 * math.pi)))
        tris.extend(members)
        placed += 1
    return World(lo, hi, tris, tuple(s), tuple(g))
