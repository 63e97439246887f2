"""Scenario runner, metrics, suites and SVG plots."""

from .metrics import MetricsRecord, avg_jerk_from_speeds, compute_metrics
from .plot import emit_plot, render_svg
from .scenario import Scenario, ScenarioError, load_scenario, run_scenario
from .suite import SUMMARY_COLUMNS, Suite, load_suite, run_suite, suite_from_dict

__all__ = [
    "MetricsRecord", "SUMMARY_COLUMNS", "Scenario", "ScenarioError", "Suite",
    "avg_jerk_from_speeds", "compute_metrics", "emit_plot", "load_scenario", "load_suite",
    "render_svg", "run_scenario", "run_suite", "suite_from_dict",
]
