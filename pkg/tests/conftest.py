"""Test configuration and fixtures for the in-orbit analytics toolkit."""

import os
import sys
import tempfile
from pathlib import Path

import pytest

# Repository root on the path so that ``src`` imports as a package
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.branch_and_bound import BranchAndBound
from src.models import Constellation, Satellite, build_application
from src.planner import DeploymentPlan, SolverStatus
from src.profiles import FunctionProfile, model_from_coefficients
from src.scenario import load_scenario


def make_profile(name, segments, speed_gpu=0.0, memory=1e9, continuous=True,
                 gpu_base_cpu_quota=0.0, **kwargs):
    """Build a FunctionProfile whose minimum quota is the start of its first segment."""
    model = model_from_coefficients(segments, continuous=continuous)
    return FunctionProfile(name=name, speed_cpu=model, speed_gpu=speed_gpu, memory=memory,
                           min_cpu_quota=model.lower_bound,
                           gpu_base_cpu_quota=gpu_base_cpu_quota, **kwargs)


@pytest.fixture
def linear_profile():
    """One tile per second per core on [0.5, 4] cores."""
    return make_profile("linear", [(0.5, 4.0, 1.0, 0.0)])


@pytest.fixture
def concave_profile():
    """Two segments, slope 0.4 up to 2 cores and 0.2 above, continuous at 2."""
    return make_profile("concave", [(0.5, 2.0, 0.4, 0.0), (2.0, 4.0, 0.2, 0.4)])


@pytest.fixture
def convex_profile():
    """Two segments, slope 0.2 up to 2 cores and 0.5 above, continuous at 2."""
    return make_profile("convex", [(0.5, 2.0, 0.2, 0.0), (2.0, 4.0, 0.5, -0.6)])


@pytest.fixture
def chain_app():
    """Two functions, every tile of function 1 forwarded to function 2."""
    return build_application([(1, "detect", "linear"), (2, "classify", "linear")],
                             [(1, 2, 1.0)])


@pytest.fixture
def single_app():
    return build_application([(1, "detect", "linear")], [])


@pytest.fixture
def diamond_app():
    """1 -> {2, 3} -> 4 with distinct ratios."""
    return build_application(
        [(1, "a", "linear"), (2, "b", "linear"), (3, "c", "linear"), (4, "d", "linear")],
        [(1, 2, 0.5), (1, 3, 0.4), (2, 4, 0.5), (3, 4, 1.0)],
    )


@pytest.fixture
def three_satellites():
    """Three CPU-only satellites, 8 s frames, 10 s revisit."""
    return Constellation(
        satellites=tuple(Satellite(j, 4.0, 8e9) for j in (1, 2, 3)),
        frame_deadline=8.0,
        revisit_interval=10.0,
    )


@pytest.fixture
def chain_plan():
    """Function 1 on satellite 1 and function 2 on satellite 3, four cores each."""
    cpu = [[4.0, 0.0, 0.0], [0.0, 0.0, 4.0]]
    gpu = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
    return DeploymentPlan(cpu, gpu, None, SolverStatus.FEASIBLE)


@pytest.fixture
def small_solver():
    """Branch-and-bound with a small node budget for scenario-sized problems."""
    return BranchAndBound(max_nodes=1000)


@pytest.fixture(scope="session")
def jetson3_scenario():
    return load_scenario("jetson3")


@pytest.fixture(scope="session")
def pi4_scenario():
    return load_scenario("pi4")


@pytest.fixture
def temp_directory():
    """Create a temporary directory for testing file operations."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def write_trace(temp_directory):
    """Write contact rows to a CSV trace and return its path."""
    def _write(rows, name="trace.csv"):
        path = temp_directory / name
        lines = ["sat_id,start_s,end_s,rate_bps"]
        lines += [",".join(str(v) for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
    return _write


@pytest.fixture
def profile_factory():
    return make_profile
