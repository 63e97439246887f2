"""Receding-horizon motion planning by constrained Bayesian optimization.

Each planning round samples a few commands inside the dynamic window,
fits Gaussian-process surrogates of cost-to-go and obstacle clearance, and
applies the command maximizing constrained expected improvement.
"""

from .errors import (GenerationError, InvalidInputError, NumericalError,
                     UnsupportedFeatureError, WorldParseError)
from .kinematics import (ControlWindow, KinodynamicLimits, QuadrotorModel, UnicycleModel,
                         dynamic_window, make_model, rk4_step, rollout)
from .world import (Box, Circle, Polygon, SafetyConfig, Sphere, World, load_world,
                    save_world, signed_distance, validate_trajectory)
from .planner import PlannerConfig, PlanResult, plan_step, replay, run
from .dwa import DwaConfig, dwa_plan_step, dwa_run

__version__ = "0.1.0"

__all__ = [
    "Box", "Circle", "ControlWindow", "DwaConfig", "GenerationError", "InvalidInputError",
    "KinodynamicLimits", "NumericalError", "PlanResult", "PlannerConfig", "Polygon",
    "QuadrotorModel", "SafetyConfig", "Sphere", "UnicycleModel", "UnsupportedFeatureError",
    "World", "WorldParseError", "dwa_plan_step", "dwa_run", "dynamic_window", "load_world",
    "make_model", "plan_step", "replay", "rk4_step", "rollout", "run", "save_world",
    "signed_distance", "validate_trajectory", "__version__",
]
