"""Deterministic SVG rendering of a world and an executed trajectory.

Segments are colored by linear speed, ``rgb(255 t, 0, 255 (1 - t))`` with
``t = speed / v_max`` clipped to [0, 1]: blue when stopped, red at full
speed.  3-D worlds are drawn as a top-down (x, y) projection with a warning.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

from ..planner import PlanResult
from ..world import Box, Circle, Polygon, Sphere, World
from .scenario import atomic_write

CANVAS = 600.0
PAD = 20.0
PROJECTION_WARNING = "warning: 3-D world drawn as a top-down (x, y) projection"


def speed_color(speed: float, v_max: float) -> str:
    t = float(np.clip(speed / v_max, 0.0, 1.0)) if v_max > 0 else 0.0
    return f"rgb({round(255 * t)},0,{round(255 * (1 - t))})"


class _Frame:
    """World (x, y) to pixel coordinates, y pointing up."""

    def __init__(self, world: World):
        self.lo = np.asarray(world.bounds_min[:2], dtype=float)
        ext = np.asarray(world.bounds_max[:2], dtype=float) - self.lo
        self.s = (CANVAS - 2 * PAD) / float(max(ext.max(), 1e-9))
        self.w = ext[0] * self.s + 2 * PAD
        self.h = ext[1] * self.s + 2 * PAD

    def xy(self, p) -> tuple[float, float]:
        return (PAD + (p[0] - self.lo[0]) * self.s, self.h - PAD - (p[1] - self.lo[1]) * self.s)

    def length(self, d: float) -> float:
        return d * self.s


def _f(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _obstacle_svg(ob, fr: _Frame) -> str:
    style = 'fill="#808080" stroke="#404040" stroke-width="1"'
    if isinstance(ob, (Circle, Sphere)):
        x, y = fr.xy(ob.center)
        return f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(fr.length(ob.radius))}" {style}/>'
    if isinstance(ob, Box):
        x0, y1 = fr.xy(ob.min_corner)
        x1, y0 = fr.xy(ob.max_corner)
        return (f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(x1 - x0)}" '
                f'height="{_f(y1 - y0)}" {style}/>')
    if isinstance(ob, Polygon):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in (fr.xy(v) for v in ob.vertices))
        return f'<polygon points="{pts}" {style}/>'
    raise TypeError(f"cannot draw {type(ob).__name__}")


def render_svg(world: World, states: np.ndarray, dt: float, v_max: float,
               goal: Sequence[float] | None = None) -> str:
    """SVG document text for ``states`` (rows of full states) in ``world``."""
    fr = _Frame(world)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    pos = states[:, : world.dimension]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(fr.w)}" '
           f'height="{_f(fr.h)}" viewBox="0 0 {_f(fr.w)} {_f(fr.h)}">',
           f'<rect x="0" y="0" width="{_f(fr.w)}" height="{_f(fr.h)}" fill="white"/>']
    x0, y0 = fr.xy(world.bounds_min)
    x1, y1 = fr.xy(world.bounds_max)
    out.append(f'<rect x="{_f(x0)}" y="{_f(y1)}" width="{_f(x1 - x0)}" '
               f'height="{_f(y0 - y1)}" fill="none" stroke="black" stroke-width="1"/>')
    out.extend(_obstacle_svg(ob, fr) for ob in world.obstacles)
    steps = np.linalg.norm(np.diff(pos, axis=0), axis=1) if len(pos) > 1 else np.zeros(0)
    if not np.any(steps > 0):
        x, y = fr.xy(pos[0])
        out.append(f'<circle class="traj" cx="{_f(x)}" cy="{_f(y)}" r="3" '
                   f'fill="{speed_color(0.0, v_max)}"/>')
    else:
        for k, d in enumerate(steps):
            a, b = fr.xy(pos[k]), fr.xy(pos[k + 1])
            out.append(f'<line class="traj" x1="{_f(a[0])}" y1="{_f(a[1])}" x2="{_f(b[0])}" '
                       f'y2="{_f(b[1])}" stroke="{speed_color(d / dt, v_max)}" '
                       f'stroke-width="2"/>')
    sx, sy = fr.xy(pos[0])
    out.append(f'<circle class="start" cx="{_f(sx)}" cy="{_f(sy)}" r="5" fill="none" '
               f'stroke="green" stroke-width="2"/>')
    g = goal if goal is not None else world.goal
    if g is not None:
        gx, gy = fr.xy(g)
        out.append(f'<circle class="goal" cx="{_f(gx)}" cy="{_f(gy)}" r="5" fill="none" '
                   f'stroke="black" stroke-width="2"/>')
    if world.dimension == 3:
        out.append(f'<text x="{_f(PAD)}" y="{_f(PAD - 5)}" font-size="12" fill="red">'
                   f'{PROJECTION_WARNING}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(result: PlanResult, world: World, path: str | os.PathLike,
              v_max: float = 1.0) -> str:
    """Write the SVG for ``result`` to ``path`` and return its text."""
    text = render_svg(world, result.trajectory, result.dt, v_max, result.goal)
    atomic_write(path, text)
    return text
