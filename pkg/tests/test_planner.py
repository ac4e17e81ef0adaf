"""
Unit tests for deployment planning, verification and baselines.
"""

import numpy as np
import pytest

from src.branch_and_bound import BranchAndBound
from src.errors import DimensionMismatch, NotEnoughSatellites
from src.models import Constellation, Satellite, build_application
from src.planner import (
    DeploymentModel, DeploymentPlan, Device, Instance, InstanceCapacityTable, SolverStatus,
    baseline_compute_parallel, baseline_data_parallel, deadline_sweep, instance_capacities,
    max_analyzable_tiles, plan_margins, satellite_utilization, solve_deployment, verify_plan
)
from src.profiles import eval_speed
from src.scenario import REFERENCE_PROFILES, load_profiles


@pytest.fixture
def one_satellite():
    return Constellation((Satellite(1, 4.0, 8e9),), frame_deadline=8.0, revisit_interval=10.0)


class TestDeploymentPlan:
    """Test cases for the DeploymentPlan container."""

    def test_matrices_are_read_only(self, chain_plan):
        with pytest.raises(ValueError):
            chain_plan.cpu_quota[0, 0] = 1.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            DeploymentPlan([[1.0, 0.0]], [[0.0]], None, SolverStatus.FEASIBLE)

    def test_accessors(self, chain_plan):
        assert chain_plan.num_functions == 2
        assert chain_plan.num_satellites == 3
        assert chain_plan.quota(2, 3) == 4.0
        assert chain_plan.slice(1, 1) == 0.0
        assert chain_plan.is_feasible

    def test_empty_plan_is_infeasible(self):
        plan = DeploymentPlan.empty(2, 3)
        assert not plan.is_feasible
        assert plan.objective_margin is None
        assert plan.cpu_quota.shape == (2, 3)


class TestSolveDeployment:
    """Test cases for solve_deployment."""

    def test_single_function_single_satellite(self, single_app, one_satellite, linear_profile):
        """All four cores go to the only function."""
        plan = solve_deployment(one_satellite, single_app, {"linear": linear_profile}, {1: 10.0})
        assert plan.status is SolverStatus.OPTIMAL
        assert plan.quota(1, 1) == pytest.approx(4.0)
        assert plan.objective_margin == pytest.approx(4.0 * 8.0 - 10.0)

    def test_margin_balances_functions(self, chain_app, one_satellite, linear_profile):
        """Two equal functions split the cores to equalize their margins."""
        plan = solve_deployment(one_satellite, chain_app, {"linear": linear_profile},
                                {1: 4.0, 2: 4.0})
        assert plan.status is SolverStatus.OPTIMAL
        assert plan.quota(1, 1) == pytest.approx(2.0)
        assert plan.quota(2, 1) == pytest.approx(2.0)
        assert plan.objective_margin == pytest.approx(2.0 * 8.0 - 4.0)

    def test_workload_above_capacity_is_infeasible(self, single_app, one_satellite, linear_profile):
        plan = solve_deployment(one_satellite, single_app, {"linear": linear_profile}, {1: 33.0})
        assert plan.status is SolverStatus.INFEASIBLE
        assert not plan.cpu_quota.any()

    def test_memory_limits_instances(self, chain_app, linear_profile, profile_factory):
        """Two functions that cannot share a satellite's memory go to different satellites."""
        heavy = profile_factory("linear", [(0.5, 4.0, 1.0, 0.0)], memory=5e9)
        constellation = Constellation((Satellite(1, 4.0, 8e9), Satellite(2, 4.0, 8e9)), 8.0, 10.0)
        plan = solve_deployment(constellation, chain_app, {"linear": heavy}, {1: 8.0, 2: 8.0})
        assert plan.is_feasible
        for j in (1, 2):
            active = [i for i in (1, 2) if plan.quota(i, j) > 0]
            assert len(active) <= 1

    def test_minimum_quota_respected(self, chain_app, one_satellite, profile_factory):
        """Active quotas never drop below the profile's minimum."""
        profile = profile_factory("linear", [(1.5, 4.0, 1.0, 0.0)])
        plan = solve_deployment(one_satellite, chain_app, {"linear": profile}, {1: 1.0, 2: 1.0})
        for i in (1, 2):
            assert plan.quota(i, 1) == 0.0 or plan.quota(i, 1) >= 1.5 - 1e-9

    def test_gpu_slices(self, single_app, profile_factory):
        """A GPU-capable function gets GPU time on a GPU satellite."""
        profile = profile_factory("linear", [(0.5, 4.0, 0.1, 0.0)], speed_gpu=10.0,
                                  gpu_base_cpu_quota=0.5)
        constellation = Constellation((Satellite(1, 4.0, 8e9, has_gpu=True),), 8.0, 10.0, alpha=0.9)
        plan = solve_deployment(constellation, single_app, {"linear": profile}, {1: 50.0})
        assert plan.is_feasible
        assert 0 < plan.slice(1, 1) <= 0.9 * 8.0 + 1e-9
        assert verify_plan(plan, constellation, single_app, {"linear": profile}, {1: 50.0}).passed

    def test_no_gpu_no_slices(self, chain_app, one_satellite, profile_factory):
        profile = profile_factory("linear", [(0.5, 4.0, 1.0, 0.0)], speed_gpu=10.0)
        plan = solve_deployment(one_satellite, chain_app, {"linear": profile}, {1: 4.0, 2: 4.0})
        assert not plan.gpu_slice.any()

    def test_non_concave_model(self, single_app, one_satellite, convex_profile):
        """Segment selection binaries handle convex speed models."""
        plan = solve_deployment(one_satellite, single_app, {"convex": convex_profile}, {1: 5.0})
        assert plan.status is SolverStatus.OPTIMAL
        assert plan.quota(1, 1) == pytest.approx(4.0)
        assert plan.objective_margin == pytest.approx(eval_speed(convex_profile.speed_cpu, 4.0) * 8 - 5)

    def test_non_concave_matches_enumeration(self, convex_profile):
        app = build_application([(1, "a", "convex"), (2, "b", "convex")], [(1, 2, 0.5)])
        constellation = Constellation((Satellite(1, 4.0, 8e9),), 8.0, 10.0)
        model = DeploymentModel(constellation, app, {"convex": convex_profile}, {1: 2.0, 2: 1.0})
        plan = solve_deployment(constellation, app, {"convex": convex_profile}, {1: 2.0, 2: 1.0})
        oracle = BranchAndBound().enumerate(model.program)
        assert plan.objective_margin == pytest.approx(-oracle.objective, abs=1e-5)

    @pytest.mark.parametrize("workload, margin", [(7.2, 0.1102), (5.0, 2.3102)])
    def test_upward_jump_uses_full_capacity(self, workload, margin):
        """
        The table-literal cloud model steps up at 2 cores. At 2.2 cores it
        runs 0.73102 tiles/s, above what the first segment's line promises.
        """
        cloud = load_profiles(REFERENCE_PROFILES)["cloud"]
        app = build_application([(1, "cloud", "cloud")], [])
        constellation = Constellation((Satellite(1, 2.2, 8e9),), 10.0, 10.0)
        plan = solve_deployment(constellation, app, {"cloud": cloud}, {1: workload})
        assert plan.is_feasible
        assert plan.quota(1, 1) == pytest.approx(2.2)
        assert plan.objective_margin == pytest.approx(margin, abs=1e-4)
        margins = plan_margins(plan, constellation, app, {"cloud": cloud}, {1: workload})
        assert plan.objective_margin == pytest.approx(margins[1], abs=1e-6)

    def test_non_finite_workload(self, single_app, one_satellite, linear_profile):
        with pytest.raises(ValueError):
            solve_deployment(one_satellite, single_app, {"linear": linear_profile}, {1: np.inf})

    def test_scenario_plan_verifies(self, jetson3_scenario, small_solver):
        """The bundled GPU scenario yields a plan that passes every check."""
        s = jetson3_scenario
        plan = solve_deployment(s.constellation, s.app, s.profiles, s.workloads(), small_solver)
        assert plan.is_feasible
        assert plan.objective_margin >= 0
        assert verify_plan(plan, s.constellation, s.app, s.profiles, s.workloads()).passed


class TestVerifyPlan:
    """Test cases for verify_plan."""

    def test_hand_plan_passes(self, chain_app, three_satellites, chain_plan, linear_profile):
        report = verify_plan(chain_plan, three_satellites, chain_app, {"linear": linear_profile},
                             {1: 10.0, 2: 10.0})
        assert report.passed
        assert report.check("throughput").worst_slack == pytest.approx(22.0)

    def test_overloaded_cpu_fails(self, chain_app, three_satellites, linear_profile):
        plan = DeploymentPlan([[3.0, 0, 0], [3.0, 0, 0]], np.zeros((2, 3)), None, SolverStatus.FEASIBLE)
        report = verify_plan(plan, three_satellites, chain_app, {"linear": linear_profile},
                             {1: 1.0, 2: 1.0})
        assert not report.check("cpu_capacity").passed
        assert [c.name for c in report.failed()] == ["cpu_capacity"]

    def test_gpu_on_cpu_only_satellite_fails(self, chain_app, three_satellites, linear_profile):
        plan = DeploymentPlan([[4.0, 0, 0], [0, 4.0, 0]], [[0, 0, 1.0], [0, 0, 0]], None,
                              SolverStatus.FEASIBLE)
        report = verify_plan(plan, three_satellites, chain_app, {"linear": linear_profile},
                             {1: 1.0, 2: 1.0})
        assert not report.check("gpu_availability").passed

    def test_throughput_shortfall_fails(self, chain_app, three_satellites, chain_plan, linear_profile):
        report = verify_plan(chain_plan, three_satellites, chain_app, {"linear": linear_profile},
                             {1: 40.0, 2: 10.0})
        assert not report.check("throughput").passed

    def test_quota_below_minimum_fails(self, chain_app, three_satellites, linear_profile):
        plan = DeploymentPlan([[0.2, 0, 0], [0, 4.0, 0]], np.zeros((2, 3)), None, SolverStatus.FEASIBLE)
        report = verify_plan(plan, three_satellites, chain_app, {"linear": linear_profile},
                             {1: 0.0, 2: 1.0})
        assert not report.check("min_quota").passed

    def test_memory_overflow_fails(self, chain_app, three_satellites, profile_factory):
        heavy = profile_factory("linear", [(0.5, 4.0, 1.0, 0.0)], memory=5e9)
        plan = DeploymentPlan([[2.0, 0, 0], [2.0, 0, 0]], np.zeros((2, 3)), None, SolverStatus.FEASIBLE)
        report = verify_plan(plan, three_satellites, chain_app, {"linear": heavy}, {1: 1.0, 2: 1.0})
        assert not report.check("memory").passed

    def test_dimension_mismatch(self, chain_app, three_satellites, linear_profile):
        plan = DeploymentPlan.empty(2, 2)
        with pytest.raises(DimensionMismatch):
            verify_plan(plan, three_satellites, chain_app, {"linear": linear_profile}, {1: 1, 2: 1})


class TestInstanceCapacities:
    """Test cases for instance_capacities and plan_margins."""

    def test_cpu_capacities(self, chain_app, chain_plan, linear_profile):
        table = instance_capacities(chain_plan, chain_app, {"linear": linear_profile}, 8.0)
        assert dict(table.items()) == {
            Instance(1, 1, Device.CPU): 32.0,
            Instance(2, 3, Device.CPU): 32.0,
        }
        assert table.total_for(2) == 32.0
        assert table.instances_of(1) == [Instance(1, 1, Device.CPU)]

    def test_gpu_capacity(self, single_app, profile_factory):
        profile = profile_factory("linear", [(0.5, 4.0, 1.0, 0.0)], speed_gpu=4.0)
        plan = DeploymentPlan([[0.0]], [[2.5]], None, SolverStatus.FEASIBLE)
        table = instance_capacities(plan, single_app, {"linear": profile}, 8.0)
        assert dict(table.items()) == {Instance(1, 1, Device.GPU): 10.0}

    def test_table_accepts_plain_tuples(self):
        table = InstanceCapacityTable({(1, 2, "cpu"): 3.0})
        assert table[Instance(1, 2, Device.CPU)] == 3.0

    def test_plan_margins(self, chain_app, three_satellites, chain_plan, linear_profile):
        margins = plan_margins(chain_plan, three_satellites, chain_app, {"linear": linear_profile},
                               {1: 10.0, 2: 5.0})
        assert margins == {1: pytest.approx(22.0), 2: pytest.approx(27.0)}


class TestBaselines:
    """Test cases for the compute-parallel and data-parallel placements."""

    def test_compute_parallel_diagonal(self, chain_app, three_satellites, linear_profile):
        plan = baseline_compute_parallel(three_satellites, chain_app, {"linear": linear_profile},
                                         {1: 10.0, 2: 10.0})
        assert plan.placement == "compute-parallel"
        assert plan.status is SolverStatus.FEASIBLE
        np.testing.assert_allclose(plan.cpu_quota, [[4.0, 0, 0], [0, 4.0, 0]])
        assert plan.objective_margin == pytest.approx(22.0)

    def test_compute_parallel_needs_satellites(self, diamond_app, three_satellites, linear_profile):
        with pytest.raises(NotEnoughSatellites):
            baseline_compute_parallel(three_satellites, diamond_app, {"linear": linear_profile})

    def test_compute_parallel_reports_shortfall(self, chain_app, three_satellites, linear_profile):
        """The baseline keeps a Feasible status even when its margin is negative."""
        plan = baseline_compute_parallel(three_satellites, chain_app, {"linear": linear_profile},
                                         {1: 40.0, 2: 10.0})
        assert plan.status is SolverStatus.FEASIBLE
        assert plan.objective_margin == pytest.approx(-8.0)

    def test_data_parallel_equal_shares(self, chain_app, three_satellites, linear_profile):
        plan = baseline_data_parallel(three_satellites, chain_app, {"linear": linear_profile})
        np.testing.assert_allclose(plan.cpu_quota, np.full((2, 3), 2.0))
        assert plan.objective_margin is None

    def test_data_parallel_memory_infeasible(self, pi4_scenario):
        """Four functions need more memory than one small satellite holds."""
        s = pi4_scenario
        plan = baseline_data_parallel(s.constellation, s.app, s.profiles, s.workloads())
        assert plan.status is SolverStatus.INFEASIBLE
        assert plan.placement == "data-parallel"

    def test_data_parallel_share_below_minimum(self, chain_app, profile_factory):
        profile = profile_factory("linear", [(2.5, 4.0, 1.0, 0.0)])
        constellation = Constellation((Satellite(1, 4.0, 8e9),), 8.0, 10.0)
        plan = baseline_data_parallel(constellation, chain_app, {"linear": profile})
        assert not plan.is_feasible


class TestUtilizationAndSweeps:
    """Test cases for satellite_utilization, max_analyzable_tiles and deadline_sweep."""

    def test_utilization(self, chain_app, three_satellites, chain_plan, linear_profile):
        df = satellite_utilization(chain_plan, three_satellites, chain_app, {"linear": linear_profile})
        assert list(df["satellite"]) == [1, 2, 3]
        assert list(df["cpu_used"]) == [4.0, 0.0, 4.0]
        assert list(df["memory_used"]) == [1e9, 0.0, 1e9]
        assert (df["gpu_seconds_available"] == 0.0).all()

    def test_max_analyzable_tiles(self, single_app, one_satellite, linear_profile):
        """One function at four tiles per second for 8 s analyses 32 tiles."""
        assert max_analyzable_tiles(one_satellite, single_app, {"linear": linear_profile}) == 32.0

    def test_max_analyzable_tiles_real_valued(self, chain_app, one_satellite, linear_profile):
        """Two chained functions share 4 cores: 2 cores each, 16 tiles."""
        tiles = max_analyzable_tiles(one_satellite, chain_app, {"linear": linear_profile},
                                     integral=False, tolerance=1e-6)
        assert tiles == pytest.approx(16.0, rel=1e-5)

    def test_deadline_sweep(self, single_app, one_satellite, linear_profile):
        df = deadline_sweep(one_satellite, single_app, {"linear": linear_profile}, 20.0, [4.0, 8.0])
        assert list(df.columns) == ["frame_deadline", "status", "objective_margin",
                                    "max_analyzable_tiles"]
        assert list(df["status"]) == ["Infeasible", "Optimal"]
        assert list(df["max_analyzable_tiles"]) == [16.0, 32.0]
        assert df["objective_margin"].iloc[1] == pytest.approx(12.0)
