"""Exact Gaussian-process regression with a squared-exponential ARD kernel.

Targets are standardized internally: a model stores a mean offset and the
prior signal standard deviation per output, and fits the unit-variance
problem with a Cholesky factorization.  Several outputs that share inputs and
(standardized) hyperparameters can be fitted with one factorization, which is
how the planner handles one objective plus K constraint surrogates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidInputError, NumericalError

JITTER_FLOOR = 1e-13
JITTER_MAX = 1e-4
SIGNAL_VARIANCE_FLOOR = 1e-6
DEFAULT_LENGTHSCALE_FRACTION = 0.3
DEFAULT_NOISE_RATIO = 1e-8


@dataclass(frozen=True)
class KernelHyperparams:
    signal_variance: float
    lengthscales: tuple
    noise_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", tuple(float(x) for x in self.lengthscales))
        if not self.signal_variance > 0:
            raise InvalidInputError("signal_variance must be positive")
        if not all(ls > 0 for ls in self.lengthscales):
            raise InvalidInputError("lengthscales must be positive")
        if not self.noise_variance >= 0:
            raise InvalidInputError("noise_variance must be non-negative")


class Dataset(NamedTuple):
    inputs: np.ndarray
    targets: np.ndarray


def kernel_se_ard(u: Sequence[float], u_prime: Sequence[float], h: KernelHyperparams) -> float:
    """``signal_variance * exp(-0.5 * sum(((u - u') / lengthscale)**2))``."""
    a = np.asarray(u, dtype=float)
    b = np.asarray(u_prime, dtype=float)
    if a.shape != b.shape or a.shape != (len(h.lengthscales),):
        raise InvalidInputError(
            f"kernel inputs {a.shape}/{b.shape} do not match {len(h.lengthscales)} lengthscales")
    r = (a - b) / np.asarray(h.lengthscales)
    return float(h.signal_variance * math.exp(-0.5 * float(np.dot(r, r))))


def correlation_matrix(A: np.ndarray, B: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    """Unit-variance SE-ARD kernel matrix between row sets ``A`` and ``B``."""
    diff = (A[:, None, :] - B[None, :, :]) / lengthscales
    return np.exp(-0.5 * np.einsum("ijd,ijd->ij", diff, diff))


def _cholesky_with_jitter(R: np.ndarray, base_noise: float):
    jitter = JITTER_FLOOR
    eye = np.eye(R.shape[0])
    while True:
        try:
            return np.linalg.cholesky(R + (base_noise + jitter) * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise NumericalError(
                    f"kernel matrix not positive definite even with jitter {JITTER_MAX}")


@dataclass(frozen=True)
class GpModel:
    """Fitted posterior for one or more outputs sharing training inputs.

    Arrays: ``inputs`` (n, d); ``chol`` (n, n) lower factor of the
    standardized kernel matrix; ``weights`` (n, m); ``offset`` and ``scale``
    (m,) map standardized predictions back to target units.
    """

    inputs: np.ndarray
    lengthscales: np.ndarray
    chol: np.ndarray
    weights: np.ndarray
    offset: np.ndarray
    scale: np.ndarray
    noise_ratio: float
    jitter: float

    @property
    def n_outputs(self) -> int:
        return self.weights.shape[1]

    @property
    def signal_variance(self) -> np.ndarray:
        return self.scale ** 2

    @property
    def effective_noise_variance(self) -> np.ndarray:
        """Diagonal term actually added to the kernel matrix, per output."""
        return (self.noise_ratio + self.jitter) * self.scale ** 2

    def predict(self, queries: np.ndarray):
        """Posterior mean and std at each query row; both of shape (q, m)."""
        Q = np.atleast_2d(np.asarray(queries, dtype=float))
        if Q.shape[1] != self.inputs.shape[1]:
            raise InvalidInputError(
                f"query dimension {Q.shape[1]} != training dimension {self.inputs.shape[1]}")
        Ks = correlation_matrix(Q, self.inputs, self.lengthscales)
        mean_s = Ks @ self.weights
        v = solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
        var_s = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)
        std_s = np.sqrt(var_s)
        return self.offset + mean_s * self.scale, std_s[:, None] * self.scale


def _fit(inputs, targets_s, lengthscales, noise_ratio, offset, scale) -> GpModel:
    R = correlation_matrix(inputs, inputs, lengthscales)
    L, jitter = _cholesky_with_jitter(R, noise_ratio)
    z = solve_triangular(L, targets_s, lower=True, check_finite=False)
    w = solve_triangular(L.T, z, lower=False, check_finite=False)
    return GpModel(inputs, lengthscales, L, w, offset, scale, noise_ratio, jitter)


def _check_data(inputs, targets):
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    Y = np.asarray(targets, dtype=float)
    if X.shape[0] < 1:
        raise InvalidInputError("at least one observation is required")
    if Y.shape[0] != X.shape[0]:
        raise InvalidInputError(f"{X.shape[0]} inputs but {Y.shape[0]} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InvalidInputError("non-finite training data")
    return X, Y


def gp_fit(data: Dataset | tuple, h: KernelHyperparams) -> GpModel:
    """Fit a single-output GP with the given hyperparameters."""
    X, y = _check_data(*data)
    if y.ndim != 1:
        raise InvalidInputError("gp_fit expects a 1-D target vector")
    if X.shape[1] != len(h.lengthscales):
        raise InvalidInputError(
            f"input dimension {X.shape[1]} != {len(h.lengthscales)} lengthscales")
    offset = np.array([y.mean()])
    scale = np.array([math.sqrt(h.signal_variance)])
    ys = ((y - offset[0]) / scale[0])[:, None]
    return _fit(X, ys, np.asarray(h.lengthscales), h.noise_variance / h.signal_variance,
                offset, scale)


def gp_posterior(model: GpModel, query: Sequence[float]) -> tuple[float, float]:
    """Posterior ``(mean, std)`` of a single-output model at one query point."""
    q = np.asarray(query, dtype=float)
    if q.ndim != 1:
        raise InvalidInputError("query must be a single vector")
    mean, std = model.predict(q[None, :])
    return float(mean[0, 0]), float(std[0, 0])


def default_lengthscales(window_width: np.ndarray) -> np.ndarray:
    w = np.asarray(window_width, dtype=float)
    return np.maximum(DEFAULT_LENGTHSCALE_FRACTION * w, 1e-6)


def default_hyperparams(targets: np.ndarray, window_width: np.ndarray) -> KernelHyperparams:
    """Fixed per-step hyperparameters scaled to the window and the targets."""
    sv = max(float(np.var(targets)), SIGNAL_VARIANCE_FLOOR)
    return KernelHyperparams(sv, tuple(default_lengthscales(window_width)),
                             DEFAULT_NOISE_RATIO * sv)


def gp_fit_shared(inputs: np.ndarray, targets: np.ndarray, lengthscales: np.ndarray,
                  noise_ratio: float = DEFAULT_NOISE_RATIO) -> GpModel:
    """Fit every column of ``targets`` with the default per-output hyperparameters.

    Column ``j`` gets signal variance ``max(var(targets[:, j]), 1e-6)`` and
    noise ``noise_ratio`` times that, so all columns share one standardized
    kernel matrix and one factorization.
    """
    X, Y = _check_data(inputs, targets)
    Y = Y.reshape(Y.shape[0], -1)
    ls = np.asarray(lengthscales, dtype=float)
    if X.shape[1] != ls.shape[0]:
        raise InvalidInputError(f"input dimension {X.shape[1]} != {ls.shape[0]} lengthscales")
    offset = Y.mean(axis=0)
    scale = np.sqrt(np.maximum(Y.var(axis=0), SIGNAL_VARIANCE_FLOOR))
    return _fit(X, (Y - offset) / scale, ls, noise_ratio, offset, scale)


# --------------------------------------------------------------------------
# Optional type-II maximum likelihood
# --------------------------------------------------------------------------


def log_marginal_likelihood(inputs: np.ndarray, targets: np.ndarray,
                            h: KernelHyperparams) -> float:
    X, y = _check_data(inputs, targets)
    y = y - y.mean()
    K = h.signal_variance * correlation_matrix(X, X, np.asarray(h.lengthscales))
    try:
        L, _ = _cholesky_with_jitter(K / h.signal_variance, h.noise_variance / h.signal_variance)
    except NumericalError:
        return -math.inf
    L = L * math.sqrt(h.signal_variance)
    a = solve_triangular(L, y, lower=True, check_finite=False)
    return float(-0.5 * a @ a - np.sum(np.log(np.diag(L))) - 0.5 * len(y) * math.log(2 * math.pi))


def fit_hyperparams(inputs: np.ndarray, targets: np.ndarray, window_width: np.ndarray,
                    n_starts: int = 4, seed: int = 0, max_iter: int = 60,
                    noise_ratio: float = DEFAULT_NOISE_RATIO) -> KernelHyperparams:
    """ML-II hyperparameters by bounded multi-start coordinate search.

    Searches log-lengthscales in ``[0.05, 2] * window width`` and the log
    signal variance within two decades of the target variance.  Intended for
    offline studies; the planner defaults to :func:`default_hyperparams`.
    """
    X, y = _check_data(inputs, targets)
    width = np.maximum(np.asarray(window_width, dtype=float), 1e-6)
    v0 = max(float(np.var(y)), SIGNAL_VARIANCE_FLOOR)
    lo = np.concatenate([np.log(0.05 * width), [math.log(v0) - 2 * math.log(10)]])
    hi = np.concatenate([np.log(2.0 * width), [math.log(v0) + 2 * math.log(10)]])

    def score(theta):
        sv = math.exp(theta[-1])
        h = KernelHyperparams(sv, tuple(np.exp(theta[:-1])), noise_ratio * sv)
        return log_marginal_likelihood(X, y, h)

    rng = np.random.default_rng(seed)
    starts = [np.concatenate([np.log(default_lengthscales(width)), [math.log(v0)]])]
    starts += [rng.uniform(lo, hi) for _ in range(max(n_starts - 1, 0))]
    best_theta, best_val = starts[0], score(starts[0])
    for theta in starts:
        theta = np.clip(theta, lo, hi)
        val = score(theta)
        step = 0.5 * (hi - lo)
        for _ in range(max_iter):
            improved = False
            for i in range(len(theta)):
                for sign in (1.0, -1.0):
                    cand = theta.copy()
                    cand[i] = np.clip(cand[i] + sign * step[i], lo[i], hi[i])
                    cv = score(cand)
                    if cv > val:
                        theta, val, improved = cand, cv, True
            if not improved:
                step = step * 0.5
                if np.all(step < 1e-3):
                    break
        if val > best_val:
            best_theta, best_val = theta, val
    sv = math.exp(best_theta[-1])
    return KernelHyperparams(sv, tuple(np.exp(best_theta[:-1])), noise_ratio * sv)
