"""
End-to-end properties of the planner, router and simulator.

These run many solves and simulations and are marked slow.
"""

import numpy as np
import pytest

from src.branch_and_bound import BranchAndBound, MILPStatus
from src.models import (
    Constellation, Satellite, build_application, compute_flows, compute_frame_workloads
)
from src.planner import (
    DeploymentModel, baseline_compute_parallel, baseline_data_parallel, instance_capacities,
    max_analyzable_tiles, solve_deployment, verify_plan, with_frame_deadline
)
from src.routing import greedy_route, random_route, total_hop_traffic
from src.simulator import SimScenario, completion_ratio, run

pytestmark = pytest.mark.slow

# Links this fast never queue a message
UNBOUNDED_BANDWIDTH = 1e12
RATIO_SWEEP = (0.3, 0.4, 0.5, 0.6, 0.7)


def _random_concave_profile(rng, make_profile, name):
    first = float(rng.uniform(0.2, 1.0))
    second = first * float(rng.uniform(0.2, 0.9))
    return make_profile(name, [(0.5, 2.0, first, 0.0), (2.0, 4.0, second, 2.0 * (first - second))])


def _random_instance(rng, make_profile, max_functions, max_satellites, max_load):
    n = int(rng.integers(1, max_functions + 1))
    m = int(rng.integers(1, max_satellites + 1))
    edges = [(i, i + 1, float(rng.uniform(0.2, 1.0))) for i in range(1, n)]
    app = build_application([(i, f"f{i}", f"p{i}") for i in range(1, n + 1)], edges)
    profiles = {f"p{i}": _random_concave_profile(rng, make_profile, f"p{i}") for i in range(1, n + 1)}
    constellation = Constellation(tuple(Satellite(j, 4.0, 8e9) for j in range(1, m + 1)), 8.0, 10.0)
    workloads = {i: float(rng.uniform(0.5, max_load)) for i in range(1, n + 1)}
    return constellation, app, profiles, workloads


def _simulate(constellation, app, profiles, plan, tiles_per_frame, frames=96,
              bandwidth=UNBOUNDED_BANDWIDTH, request_bytes=200.0, response_bytes=200.0):
    capacities = instance_capacities(plan, app, profiles, constellation.frame_deadline)
    routing = greedy_route(capacities, constellation, app, tiles_per_frame)
    sim = SimScenario(constellation, app, profiles, plan, routing, num_frames=frames,
                      link_bandwidth=bandwidth, request_bytes=request_bytes,
                      response_bytes=response_bytes, tiles_per_frame=tiles_per_frame)
    return routing, run(sim)


def _with_ratio(app, ratio):
    functions = [(f.id, f.name, f.profile_ref) for f in app.functions]
    return build_application(functions, [(e.source, e.target, ratio) for e in app.edges])


@pytest.fixture
def solver():
    return BranchAndBound(max_nodes=2000)


class TestPlannerOptimality:
    """The branch-and-bound optimum matches exhaustive enumeration."""

    def test_concave_instances(self, profile_factory):
        rng = np.random.default_rng(2024)
        enumerator = BranchAndBound()
        for _ in range(50):
            constellation, app, profiles, workloads = _random_instance(rng, profile_factory, 2, 2, 30.0)
            plan = solve_deployment(constellation, app, profiles, workloads)
            oracle = enumerator.enumerate(DeploymentModel(constellation, app, profiles, workloads).program)
            if oracle.status is MILPStatus.INFEASIBLE:
                assert not plan.is_feasible
            else:
                assert plan.objective_margin == pytest.approx(-oracle.objective, abs=1e-5)

    def test_feasible_plans_verify(self, profile_factory):
        """Every feasible plan of a random scenario satisfies the deployment constraints."""
        rng = np.random.default_rng(7)
        solver = BranchAndBound(max_nodes=500)
        feasible = 0
        for _ in range(200):
            constellation, app, profiles, workloads = _random_instance(rng, profile_factory, 5, 5, 15.0)
            plan = solve_deployment(constellation, app, profiles, workloads, solver, first_feasible=True)
            if not plan.is_feasible:
                continue
            feasible += 1
            report = verify_plan(plan, constellation, app, profiles, workloads)
            assert report.passed, [c.name for c in report.failed()]
        assert feasible >= 60


class TestAnalyzableTiles:
    def test_scales_with_frame_deadline(self, chain_app, linear_profile):
        """Capacity grows linearly with the frame deadline."""
        constellation = Constellation((Satellite(1, 4.0, 8e9), Satellite(2, 4.0, 8e9)), 8.0, 10.0)
        profiles = {"linear": linear_profile}
        base = max_analyzable_tiles(constellation, chain_app, profiles, integral=False)
        doubled = max_analyzable_tiles(with_frame_deadline(constellation, 16.0), chain_app, profiles,
                                       integral=False)
        assert base == pytest.approx(32.0, rel=2e-3)
        assert doubled == pytest.approx(2 * base, rel=5e-3)

    def test_line_through_origin(self, jetson3_scenario):
        """Table-literal profiles on CPU-only satellites: tiles fit k * deadline within 5%."""
        s = jetson3_scenario
        constellation = Constellation((Satellite(1, 4.0, 8e9), Satellite(2, 4.0, 8e9)), 8.0, 10.0)
        deadlines = np.array([4.0, 8.0, 16.0])
        tiles = np.array([
            max_analyzable_tiles(with_frame_deadline(constellation, d), s.app, s.profiles,
                                 integral=False)
            for d in deadlines
        ])
        assert (tiles > 0).all()
        slope = float(deadlines @ tiles / (deadlines @ deadlines))
        residual = np.linalg.norm(tiles - slope * deadlines) / np.linalg.norm(tiles)
        assert residual < 0.05


class TestDeadlineSafety:
    """Verified plans on fast links analyse every tile."""

    def test_random_scenarios(self, profile_factory):
        rng = np.random.default_rng(31)
        solver = BranchAndBound(max_nodes=500)
        simulated = 0
        for _ in range(40):
            constellation, app, profiles, _ = _random_instance(rng, profile_factory, 3, 3, 1.0)
            tiles = int(rng.integers(2, 21))
            workloads = compute_frame_workloads(compute_flows(app), tiles)
            plan = solve_deployment(constellation, app, profiles, workloads, solver)
            if not plan.is_feasible:
                continue
            assert verify_plan(plan, constellation, app, profiles, workloads).passed
            routing, report = _simulate(constellation, app, profiles, plan, tiles, frames=12)
            assert routing.is_complete
            assert completion_ratio(report).application == 1.0
            assert sum(report.dropped(i) for i in app.function_ids) == 0
            simulated += 1
        assert simulated >= 10


class TestBundledScenarios:
    """Plan, route and simulate the bundled scenarios."""

    @pytest.mark.parametrize("name", ["jetson3", "pi4"])
    def test_every_frame_meets_its_deadline(self, name, jetson3_scenario, pi4_scenario, solver):
        s = {"jetson3": jetson3_scenario, "pi4": pi4_scenario}[name]
        plan = solve_deployment(s.constellation, s.app, s.profiles, s.workloads(), solver)
        assert plan.is_feasible
        routing, report = _simulate(s.constellation, s.app, s.profiles, plan, s.tiles_per_frame)
        assert routing.is_complete
        assert report.num_frames == 96
        assert completion_ratio(report).application == 1.0

    def test_traffic_matches_routing(self, jetson3_scenario, solver):
        """Whole-tile dispatch of fractional graph loads keeps the bytes within 1%."""
        s = jetson3_scenario
        plan = solve_deployment(s.constellation, s.app, s.profiles, s.workloads(), solver)
        routing, report = _simulate(s.constellation, s.app, s.profiles, plan, s.tiles_per_frame)
        predicted = total_hop_traffic(routing, 200.0, 200.0)
        assert predicted > 0
        assert report.bytes_per_frame == pytest.approx(predicted, rel=1e-2)

    @pytest.mark.parametrize("name", ["jetson3", "pi4"])
    def test_greedy_routing_saves_hops(self, name, jetson3_scenario, pi4_scenario, solver):
        """Over a sweep of forwarding ratios greedy beats the random mean at 4 of 5 points."""
        s = {"jetson3": jetson3_scenario, "pi4": pi4_scenario}[name]
        wins = 0
        for ratio in RATIO_SWEEP:
            app = _with_ratio(s.app, ratio)
            workloads = compute_frame_workloads(compute_flows(app), s.tiles_per_frame)
            plan = solve_deployment(s.constellation, app, s.profiles, workloads, solver)
            capacities = instance_capacities(plan, app, s.profiles, s.constellation.frame_deadline)
            greedy = greedy_route(capacities, s.constellation, app, s.tiles_per_frame)
            random_hops = [
                random_route(capacities, s.constellation, app, s.tiles_per_frame, seed=seed).hop_tiles()
                for seed in range(30)
            ]
            if greedy.hop_tiles() <= np.mean(random_hops) + 1e-9:
                wins += 1
        assert wins >= 4

    def test_pi4_placement_ordering(self, pi4_scenario, solver):
        """The optimized plan completes every frame; compute-parallel falls short."""
        s = pi4_scenario
        optimized = solve_deployment(s.constellation, s.app, s.profiles, s.workloads(), solver)
        compute = baseline_compute_parallel(s.constellation, s.app, s.profiles, s.workloads())
        data = baseline_data_parallel(s.constellation, s.app, s.profiles, s.workloads())
        assert not data.is_feasible

        _, optimized_report = _simulate(s.constellation, s.app, s.profiles, optimized,
                                        s.tiles_per_frame)
        _, compute_report = _simulate(s.constellation, s.app, s.profiles, compute,
                                      s.tiles_per_frame)
        optimized_ratio = completion_ratio(optimized_report).application
        compute_ratio = completion_ratio(compute_report).application
        assert optimized_ratio == 1.0
        assert compute_ratio < optimized_ratio

    def test_compute_parallel_graph_capacity(self, pi4_scenario):
        """One instance per function: the graph's capacity is the tightest normalized instance."""
        s = pi4_scenario
        plan = baseline_compute_parallel(s.constellation, s.app, s.profiles, s.workloads())
        capacities = instance_capacities(plan, s.app, s.profiles, s.constellation.frame_deadline)
        routing = greedy_route(capacities, s.constellation, s.app, s.tiles_per_frame)
        flows = compute_flows(s.app)
        expected = min(capacities[inst] / flows[inst.function] for inst in capacities)
        assert len(capacities) == s.app.num_functions
        assert routing.graphs[0].capacity == pytest.approx(expected)
