"""Expected improvement, feasibility probability and constrained EI.

All functions are vectorized over query points.  Objective values are
minimized, so improvement means going below the incumbent ``y_minus``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import qmc

from .gp import GpModel
from .kinematics import ControlWindow

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def expected_improvement(mean, std, y_minus):
    """EI for minimization; ``max(y_minus - mean, 0)`` where ``std == 0``."""
    mu = np.asarray(mean, dtype=float)
    sd = np.asarray(std, dtype=float)
    if np.any(sd < 0):
        raise ValueError("std must be non-negative")
    gap = y_minus - mu
    pos = sd > 0
    safe_sd = np.where(pos, sd, 1.0)
    with np.errstate(over="ignore"):
        # z = +-inf for vanishing sd: ndtr and exp already give the right limits
        z = gap / safe_sd
        ei = gap * ndtr(z) + safe_sd * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = np.where(pos, ei, np.maximum(gap, 0.0))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def feasibility_probability(means, stds):
    """Probability that every constraint is <= 0 under independent Gaussians.

    ``means``/``stds`` have the constraints on the last axis; an empty last
    axis gives probability one.  Zero-std factors are the indicator of
    ``mean <= 0``.
    """
    mu = np.asarray(means, dtype=float)
    sd = np.asarray(stds, dtype=float)
    if np.any(sd < 0):
        raise ValueError("stds must be non-negative")
    pos = sd > 0
    p = np.where(pos, ndtr(-mu / np.where(pos, sd, 1.0)), (mu <= 0).astype(float))
    out = np.prod(p, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class AcquisitionContext:
    """Surrogates and incumbent for one acquisition problem.

    ``constraint_models`` may hold single- or multi-output models; their
    outputs are concatenated into the K constraint posteriors.  ``y_minus``
    is ``None`` until a feasible observation exists, in which case the
    acquisition reduces to the feasibility probability.
    """

    objective_model: GpModel
    constraint_models: Sequence[GpModel] = field(default_factory=list)
    y_minus: float | None = None
    window: ControlWindow | None = None

    def constraint_posteriors(self, U: np.ndarray):
        if not self.constraint_models:
            return np.zeros((U.shape[0], 0)), np.zeros((U.shape[0], 0))
        parts = [m.predict(U) for m in self.constraint_models]
        return (np.concatenate([p[0] for p in parts], axis=1),
                np.concatenate([p[1] for p in parts], axis=1))

    def evaluate(self, U: np.ndarray):
        """Return ``(cei, feasibility_probability)`` at each row of ``U``."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        cm, cs = self.constraint_posteriors(U)
        pf = np.atleast_1d(feasibility_probability(cm, cs))
        if self.y_minus is None:
            return pf, pf
        m, s = self.objective_model.predict(U)
        ei = np.atleast_1d(expected_improvement(m[:, 0], s[:, 0], self.y_minus))
        return ei * pf, pf


def cei(u: Sequence[float], ctx: AcquisitionContext) -> float:
    """Constrained expected improvement at a single control."""
    val, _ = ctx.evaluate(np.asarray(u, dtype=float)[None, :])
    return float(val[0])


def lex_argmax(values: np.ndarray, points: np.ndarray) -> int:
    """Index of the maximum; ties go to the lexicographically smallest point."""
    values = np.asarray(values)
    ties = np.flatnonzero(values == values.max())
    if len(ties) == 1:
        return int(ties[0])
    pts = np.asarray(points)[ties]
    order = np.lexsort(pts.T[::-1])
    return int(ties[order[0]])


def low_discrepancy(window: ControlWindow, n: int, seed) -> np.ndarray:
    """``n`` scrambled Halton points inside the window."""
    sampler = qmc.Halton(d=window.dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        unit = sampler.random(n)
    return window.from_unit(unit)


def maximize_cei(ctx: AcquisitionContext, candidate_budget: int = 256, rng_seed=0,
                 refine_iters: int = 20) -> np.ndarray:
    """Approximate ``argmax CEI`` over ``ctx.window``.

    A scrambled Halton set of ``candidate_budget`` points is scored, then the
    best one is polished by bounded coordinate search: each iteration tries
    ``+-step`` along every axis, moves to the best improving trial, and halves
    the step otherwise.  If CEI vanishes everywhere on the candidate set, the
    candidate with the highest feasibility probability is returned.
    """
    if candidate_budget < 1:
        raise ValueError("candidate_budget must be >= 1")
    window = ctx.window
    cand = low_discrepancy(window, candidate_budget, rng_seed)
    vals, pf = ctx.evaluate(cand)
    if not vals.max() > 0.0:
        return cand[lex_argmax(pf, cand)]
    i = lex_argmax(vals, cand)
    best, best_val = cand[i].copy(), float(vals[i])
    step = 0.5 * window.width / max(candidate_budget, 1) ** (1.0 / window.dim)
    eye = np.eye(window.dim)
    for _ in range(refine_iters):
        trials = np.concatenate([best + eye * step, best - eye * step])
        trials = window.clip(trials)
        tv, _ = ctx.evaluate(trials)
        j = lex_argmax(tv, trials)
        if tv[j] > best_val:
            best, best_val = trials[j].copy(), float(tv[j])
        else:
            step = step * 0.5
    return best
