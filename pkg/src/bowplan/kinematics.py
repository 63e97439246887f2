"""Motion models, RK4 integration and dynamic-window computation.

States and controls are plain float arrays.  Two models are provided:

* ``unicycle``: state ``[x, y, theta, v, omega]``, control ``[v_c, omega_c]``.
  Commands are velocities held piecewise-constant, so the velocity slots of
  the state simply record the last command.
* ``quadrotor``: state ``[x, y, z, yaw, vx, vy, vz, yaw_rate, ax, ay, az,
  yaw_acc]``, control ``[vx_c, vy_c, vz_c, yaw_rate_c]``.  Velocities track
  the command with a first-order gain and saturated acceleration.

The dataclasses :class:`UnicycleState` and :class:`QuadrotorState` are named
views over those arrays for callers that prefer attribute access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInputError

UNICYCLE = "unicycle"
QUADROTOR = "quadrotor"

DEFAULT_V_MAX = 1.0
DEFAULT_V_MIN = 0.0
DEFAULT_A_MAX = 0.5
DEFAULT_OMEGA_MAX = 0.6981
DEFAULT_ALPHA_MAX = 2.0472

ArrayLike = Union[Sequence[float], np.ndarray]


def wrap_angle(a):
    """Wrap angle(s) into (-pi, pi]; values already in range are returned unchanged."""
    a = np.asarray(a, dtype=float)
    inside = (a > -math.pi) & (a <= math.pi)
    return np.where(inside, a, math.pi - np.mod(math.pi - a, 2.0 * math.pi))


def _as_vector(values, name: str, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidInputError(f"{name} must have dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite components: {arr}")
    return arr


# --------------------------------------------------------------------------
# Named state views
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UnicycleState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    v: float = 0.0
    omega: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, float(wrap_angle(self.theta)), self.v, self.omega])

    @classmethod
    def from_array(cls, arr: ArrayLike) -> "UnicycleState":
        a = _as_vector(arr, "state", 5)
        return cls(*map(float, a))


@dataclass(frozen=True)
class QuadrotorState:
    position: tuple = (0.0, 0.0, 0.0)
    yaw: float = 0.0
    linear_velocity: tuple = (0.0, 0.0, 0.0)
    yaw_rate: float = 0.0
    linear_acceleration: tuple = (0.0, 0.0, 0.0)
    yaw_acceleration: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array(
            [*self.position, float(wrap_angle(self.yaw)), *self.linear_velocity,
             self.yaw_rate, *self.linear_acceleration, self.yaw_acceleration],
            dtype=float,
        )

    @classmethod
    def from_array(cls, arr: ArrayLike) -> "QuadrotorState":
        a = _as_vector(arr, "state", 12)
        return cls(tuple(a[0:3]), float(a[3]), tuple(a[4:7]), float(a[7]),
                   tuple(a[8:11]), float(a[11]))


# --------------------------------------------------------------------------
# Limits and windows
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KinodynamicLimits:
    """Velocity and acceleration limits.

    Scalars apply to the unicycle.  For the quadrotor, ``v_min``, ``v_max``
    and ``a_max`` may be 3-sequences (per axis); ``omega_max`` and
    ``alpha_max`` bound the yaw rate and yaw acceleration.
    """

    v_min: float | tuple = DEFAULT_V_MIN
    v_max: float | tuple = DEFAULT_V_MAX
    a_max: float | tuple = DEFAULT_A_MAX
    omega_max: float = DEFAULT_OMEGA_MAX
    alpha_max: float = DEFAULT_ALPHA_MAX

    def __post_init__(self):
        lo, hi = np.atleast_1d(self.v_min), np.atleast_1d(self.v_max)
        if np.any(lo > hi):
            raise InvalidInputError(f"v_min {self.v_min} exceeds v_max {self.v_max}")
        if np.any(np.atleast_1d(self.a_max) <= 0):
            raise InvalidInputError("a_max must be positive")
        if self.omega_max <= 0 or self.alpha_max <= 0:
            raise InvalidInputError("omega_max and alpha_max must be positive")

    @classmethod
    def quadrotor(cls, v_max: float = 1.0, a_max: float = 0.5,
                  omega_max: float = DEFAULT_OMEGA_MAX,
                  alpha_max: float = DEFAULT_ALPHA_MAX) -> "KinodynamicLimits":
        """Symmetric per-axis limits for the quadrotor."""
        return cls(v_min=(-v_max,) * 3, v_max=(v_max,) * 3, a_max=(a_max,) * 3,
                   omega_max=omega_max, alpha_max=alpha_max)

    def to_dict(self) -> dict:
        def conv(v):
            return list(v) if isinstance(v, (tuple, list)) else v
        return {k: conv(getattr(self, k)) for k in
                ("v_min", "v_max", "a_max", "omega_max", "alpha_max")}

    @classmethod
    def from_dict(cls, d: dict) -> "KinodynamicLimits":
        def conv(v):
            return tuple(v) if isinstance(v, list) else v
        return cls(**{k: conv(v) for k, v in d.items()})


@dataclass(frozen=True)
class ControlWindow:
    """Axis-aligned box of admissible commands."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise InvalidInputError(f"invalid window [{lo}, {hi}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, u: ArrayLike, tol: float = 1e-12) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.lower - tol) and np.all(u <= self.upper + tol))

    def clip(self, u: ArrayLike) -> np.ndarray:
        return np.clip(np.asarray(u, dtype=float), self.lower, self.upper)

    def from_unit(self, unit: np.ndarray) -> np.ndarray:
        """Map points of the unit cube into the window."""
        return self.lower + np.asarray(unit) * self.width

    def to_unit(self, u: np.ndarray) -> np.ndarray:
        w = np.where(self.width > 0, self.width, 1.0)
        return (np.asarray(u) - self.lower) / w


# --------------------------------------------------------------------------
# Derivatives
# --------------------------------------------------------------------------


def unicycle_derivative(state: ArrayLike, u: ArrayLike) -> np.ndarray:
    """Time derivative of the unicycle state under a held velocity command.

    Works on single vectors or on stacked batches (leading dimensions).
    """
    s = np.asarray(state, dtype=float)
    c = np.asarray(u, dtype=float)
    if s.shape[-1] != 5 or c.shape[-1] != 2:
        raise InvalidInputError(f"unicycle expects state dim 5 / control dim 2, got "
                                f"{s.shape[-1]} / {c.shape[-1]}")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(c))):
        raise InvalidInputError("non-finite state or control")
    theta = s[..., 2]
    vc = c[..., 0]
    d = np.zeros(np.broadcast_shapes(s.shape, c.shape[:-1] + (5,)))
    d[..., 0] = vc * np.cos(theta)
    d[..., 1] = vc * np.sin(theta)
    d[..., 2] = c[..., 1]
    return d


def quadrotor_derivative(state: ArrayLike, u: ArrayLike, k_track: float = 5.0,
                         a_max: ArrayLike = (DEFAULT_A_MAX,) * 3,
                         alpha_max: float = DEFAULT_ALPHA_MAX) -> np.ndarray:
    """Time derivative of the 12-D quadrotor state.

    Position and yaw move with the current velocities.  Velocities track the
    command as ``clamp(k_track * (u - velocity), +-accel_limit)``.  The
    acceleration slots have zero derivative; :func:`rk4_step` writes the
    applied acceleration into them after each step.
    """
    s = np.asarray(state, dtype=float)
    c = np.asarray(u, dtype=float)
    if s.shape[-1] != 12 or c.shape[-1] != 4:
        raise InvalidInputError(f"quadrotor expects state dim 12 / control dim 4, got "
                                f"{s.shape[-1]} / {c.shape[-1]}")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(c))):
        raise InvalidInputError("non-finite state or control")
    acc_lim = np.concatenate([np.broadcast_to(np.asarray(a_max, dtype=float), (3,)),
                              [float(alpha_max)]])
    vel = s[..., 4:8]
    d = np.zeros(np.broadcast_shapes(s.shape, c.shape[:-1] + (12,)))
    d[..., 0:4] = vel
    d[..., 4:8] = np.clip(k_track * (c - vel), -acc_lim, acc_lim)
    return d


# --------------------------------------------------------------------------
# Models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UnicycleModel:
    name: str = field(default=UNICYCLE, init=False)
    state_dim: int = field(default=5, init=False)
    control_dim: int = field(default=2, init=False)
    pos_dim: int = field(default=2, init=False)

    def derivative(self, state, u):
        return unicycle_derivative(state, u)

    def finalize(self, prev, new, u, dt):
        new[..., 2] = wrap_angle(new[..., 2])
        new[..., 3:5] = u
        return new

    def current_command(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float)[3:5]

    def command_bounds(self, limits: KinodynamicLimits):
        lo = np.array([float(limits.v_min), -limits.omega_max])
        hi = np.array([float(limits.v_max), limits.omega_max])
        return lo, hi

    def accel_bounds(self, limits: KinodynamicLimits) -> np.ndarray:
        return np.array([float(limits.a_max), limits.alpha_max])

    def speed(self, state) -> float:
        return abs(float(state[3]))


@dataclass(frozen=True)
class QuadrotorModel:
    k_track: float = 5.0
    a_max: tuple = (DEFAULT_A_MAX,) * 3
    alpha_max: float = DEFAULT_ALPHA_MAX
    name: str = field(default=QUADROTOR, init=False)
    state_dim: int = field(default=12, init=False)
    control_dim: int = field(default=4, init=False)
    pos_dim: int = field(default=3, init=False)

    def derivative(self, state, u):
        return quadrotor_derivative(state, u, self.k_track, self.a_max, self.alpha_max)

    def finalize(self, prev, new, u, dt):
        new[..., 3] = wrap_angle(new[..., 3])
        new[..., 8:12] = (new[..., 4:8] - prev[..., 4:8]) / dt
        return new

    def current_command(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float)[4:8]

    def command_bounds(self, limits: KinodynamicLimits):
        lo = np.concatenate([np.broadcast_to(np.asarray(limits.v_min, float), (3,)),
                             [-limits.omega_max]])
        hi = np.concatenate([np.broadcast_to(np.asarray(limits.v_max, float), (3,)),
                             [limits.omega_max]])
        return lo, hi

    def accel_bounds(self, limits: KinodynamicLimits) -> np.ndarray:
        return np.concatenate([np.broadcast_to(np.asarray(limits.a_max, float), (3,)),
                               [limits.alpha_max]])

    def speed(self, state) -> float:
        return float(np.linalg.norm(np.asarray(state)[4:7]))


MotionModel = Union[UnicycleModel, QuadrotorModel]


def make_model(name: str | MotionModel, limits: KinodynamicLimits | None = None,
               k_track: float = 5.0) -> MotionModel:
    """Build a motion model from its tag (``"unicycle"`` / ``"quadrotor"``)."""
    if not isinstance(name, str):
        return name
    if name == UNICYCLE:
        return UnicycleModel()
    if name == QUADROTOR:
        limits = limits or KinodynamicLimits.quadrotor()
        a = tuple(np.broadcast_to(np.asarray(limits.a_max, float), (3,)).tolist())
        return QuadrotorModel(k_track=k_track, a_max=a, alpha_max=limits.alpha_max)
    raise InvalidInputError(f"unknown model tag {name!r}")


def _model_for_state(state: np.ndarray) -> MotionModel:
    if state.shape[-1] == 5:
        return UnicycleModel()
    if state.shape[-1] == 12:
        return QuadrotorModel()
    raise InvalidInputError(f"cannot infer model from state dimension {state.shape[-1]}")


# --------------------------------------------------------------------------
# Integration
# --------------------------------------------------------------------------


def _rk4(model: MotionModel, s: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    k1 = model.derivative(s, u)
    k2 = model.derivative(s + 0.5 * dt * k1, u)
    k3 = model.derivative(s + 0.5 * dt * k2, u)
    k4 = model.derivative(s + dt * k3, u)
    new = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return model.finalize(s, new, u, dt)


def rk4_step(model: str | MotionModel, state: ArrayLike, u: ArrayLike, dt: float) -> np.ndarray:
    """Advance ``state`` by one classical RK4 step with ``u`` held constant."""
    model = make_model(model)
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    s = _as_vector(state, "state", model.state_dim)
    c = _as_vector(u, "control", model.control_dim)
    return _rk4(model, s, c, dt)


def rollout(model: str | MotionModel, state: ArrayLike, u: ArrayLike, dt: float,
            steps: int) -> np.ndarray:
    """Apply the same control for ``steps`` RK4 steps.

    Returns an array of shape ``(steps + 1, state_dim)`` whose first row is
    the input state.
    """
    model = make_model(model)
    if steps < 1:
        raise InvalidInputError(f"steps must be >= 1, got {steps}")
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    s = _as_vector(state, "state", model.state_dim)
    c = _as_vector(u, "control", model.control_dim)
    out = np.empty((steps + 1, model.state_dim))
    out[0] = s
    for i in range(steps):
        out[i + 1] = _rk4(model, out[i], c, dt)
    return out


def rollout_batch(model: str | MotionModel, state: ArrayLike, controls: ArrayLike,
                  dt: float, steps: int) -> np.ndarray:
    """Vectorized :func:`rollout` for many controls from one start state.

    Returns shape ``(n_controls, steps + 1, state_dim)``.  Used for scoring
    only; executed trajectories always come from :func:`rollout`.
    """
    model = make_model(model)
    s = _as_vector(state, "state", model.state_dim)
    U = np.atleast_2d(np.asarray(controls, dtype=float))
    if U.shape[1] != model.control_dim:
        raise InvalidInputError(f"controls must have {model.control_dim} columns")
    out = np.empty((U.shape[0], steps + 1, model.state_dim))
    out[:, 0] = s
    for i in range(steps):
        out[:, i + 1] = _rk4(model, out[:, i].copy(), U, dt)
    return out


def dynamic_window(state: ArrayLike, limits: KinodynamicLimits, tau_w: float,
                   model: str | MotionModel | None = None) -> ControlWindow:
    """Commands reachable from the current velocities within ``tau_w`` seconds.

    Per command axis: ``[current - accel * tau_w, current + accel * tau_w]``
    intersected with the global command bounds.  The (clipped) current
    command always lies inside the result.
    """
    if not tau_w > 0:
        raise InvalidInputError(f"tau_w must be positive, got {tau_w}")
    s = np.asarray(state, dtype=float)
    model = _model_for_state(s) if model is None else make_model(model, limits)
    lo, hi = model.command_bounds(limits)
    cur = np.clip(model.current_command(s), lo, hi)
    reach = model.accel_bounds(limits) * tau_w
    return ControlWindow(np.maximum(cur - reach, lo), np.minimum(cur + reach, hi))
