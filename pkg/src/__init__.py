"""
In-orbit analytics planning toolkit.

Plans where the analytics functions of an application run on a
leader-follower satellite constellation, routes per-frame workloads through
the deployed instances, and simulates the result frame by frame.
"""

__version__ = "1.0.0"
__author__ = "Orbital Analytics Team"

from .models import (
    AnalyticsFunction, ApplicationGraph, Constellation, Satellite, build_application,
    compute_flows, compute_frame_workloads, validate_application
)
from .profiles import FunctionProfile, eval_speed, fit_piecewise_linear
from .planner import (
    DeploymentPlan, baseline_compute_parallel, baseline_data_parallel, instance_capacities,
    solve_deployment, verify_plan
)
from .routing import greedy_route, random_route, total_hop_traffic
from .simulator import SimScenario, completion_ratio, latency_breakdown, run
from .validation import DataValidator

__all__ = [
    "AnalyticsFunction",
    "ApplicationGraph",
    "Constellation",
    "Satellite",
    "build_application",
    "compute_flows",
    "compute_frame_workloads",
    "validate_application",
    "FunctionProfile",
    "eval_speed",
    "fit_piecewise_linear",
    "DeploymentPlan",
    "baseline_compute_parallel",
    "baseline_data_parallel",
    "instance_capacities",
    "solve_deployment",
    "verify_plan",
    "greedy_route",
    "random_route",
    "total_hop_traffic",
    "SimScenario",
    "completion_ratio",
    "latency_breakdown",
    "run",
    "DataValidator",
]
