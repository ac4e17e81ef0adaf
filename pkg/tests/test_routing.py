"""
Unit tests for realization graphs and workload routing.
"""

import numpy as np
import pytest

from src.errors import MissingVertex, PlanMismatch
from src.models import Constellation, Satellite, build_application, compute_flows
from src.planner import Device, Instance, InstanceCapacityTable
from src.routing import (
    RoutingStatus, greedy_route, random_route, realization_graph_capacity, total_hop_traffic
)


def cpu(function, satellite):
    return Instance(function, satellite, Device.CPU)


def gpu(function, satellite):
    return Instance(function, satellite, Device.GPU)


@pytest.fixture
def four_satellites():
    return Constellation(tuple(Satellite(j, 4.0, 8e9, has_gpu=True) for j in range(1, 5)), 8.0, 10.0)


class TestRealizationGraphCapacity:
    """Test cases for realization_graph_capacity."""

    def test_bottleneck_normalized_by_flow(self, diamond_app):
        """Capacity is the smallest instance capacity divided by its flow."""
        vertices = [cpu(1, 1), cpu(2, 1), cpu(3, 2), cpu(4, 2)]
        capacities = {cpu(1, 1): 100.0, cpu(2, 1): 20.0, cpu(3, 2): 30.0, cpu(4, 2): 26.0}
        sigma, flows = realization_graph_capacity(vertices, capacities, diamond_app)
        # flows: 1, 0.5, 0.4, 0.65
        assert sigma == pytest.approx(min(100.0, 20.0 / 0.5, 30.0 / 0.4, 26.0 / 0.65))
        assert flows[4] == pytest.approx(0.65)

    def test_matches_min_scan(self):
        """Agrees exactly with a direct scan on random graphs."""
        rng = np.random.default_rng(5)
        app = build_application([(1, "a", "p"), (2, "b", "p"), (3, "c", "p")],
                                [(1, 2, 0.5), (1, 3, 0.25), (2, 3, 0.5)])
        flows = compute_flows(app)
        for _ in range(100):
            vertices = [Instance(i, int(rng.integers(1, 5)), Device.CPU if rng.random() < 0.5 else Device.GPU)
                        for i in (1, 2, 3)]
            capacities = {v: float(rng.uniform(0.1, 50.0)) for v in vertices}
            oracle = min(capacities[v] / flows[v.function] for v in vertices)
            sigma, _ = realization_graph_capacity(vertices, capacities, app)
            assert sigma == oracle

    def test_accepts_mapping(self, chain_app):
        sigma, _ = realization_graph_capacity({1: cpu(1, 1), 2: cpu(2, 2)},
                                              {cpu(1, 1): 5.0, cpu(2, 2): 3.0}, chain_app)
        assert sigma == 3.0

    def test_missing_vertex(self, chain_app):
        with pytest.raises(MissingVertex):
            realization_graph_capacity([cpu(1, 1)], {cpu(1, 1): 5.0}, chain_app)

    def test_two_instances_of_one_function(self, chain_app):
        with pytest.raises(MissingVertex):
            realization_graph_capacity([cpu(1, 1), cpu(1, 2)], {}, chain_app)

    def test_undeployed_vertex(self, chain_app):
        with pytest.raises(PlanMismatch):
            realization_graph_capacity([cpu(1, 1), cpu(2, 2)], {cpu(1, 1): 5.0}, chain_app)


class TestGreedyRoute:
    """Test cases for greedy_route."""

    def test_single_graph_when_capacity_suffices(self, chain_app, three_satellites):
        capacities = InstanceCapacityTable({cpu(1, 1): 32.0, cpu(2, 3): 32.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 10)
        assert plan.status is RoutingStatus.COMPLETE
        assert len(plan.graphs) == 1
        assert plan.assigned_load == (10.0,)
        assert plan.graphs[0].vertices == (cpu(1, 1), cpu(2, 3))
        assert plan.graphs[0].hops() == 2
        assert plan.hop_tiles() == pytest.approx(20.0)
        assert plan.residual_capacities[cpu(1, 1)] == pytest.approx(22.0)

    def test_prefers_same_satellite(self, chain_app, three_satellites):
        """The downstream instance on the upstream satellite wins over a larger one further away."""
        capacities = InstanceCapacityTable({cpu(1, 2): 20.0, cpu(2, 2): 5.0, cpu(2, 3): 50.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 8)
        first = plan.graphs[0]
        assert first.vertex(2) == cpu(2, 2)
        assert plan.assigned_load[0] == pytest.approx(5.0)
        assert plan.graphs[1].vertex(2) == cpu(2, 3)
        assert plan.total_assigned == pytest.approx(8.0)
        assert plan.is_complete

    def test_tie_breaks(self, chain_app, three_satellites):
        """Equal distance: larger residual first, then CPU before GPU."""
        capacities = InstanceCapacityTable({
            cpu(1, 2): 100.0, cpu(2, 1): 10.0, cpu(2, 3): 10.0, gpu(2, 3): 10.0, gpu(2, 1): 40.0,
        })
        plan = greedy_route(capacities, three_satellites, chain_app, 55)
        assert plan.graphs[0].vertex(2) == gpu(2, 1)
        assert plan.graphs[1].vertex(2) == cpu(2, 1)
        assert plan.graphs[2].vertex(2) == cpu(2, 3)

    def test_head_on_largest_instance(self, chain_app, three_satellites):
        capacities = InstanceCapacityTable({cpu(1, 1): 5.0, cpu(1, 3): 30.0,
                                            cpu(2, 1): 30.0, cpu(2, 3): 30.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 10)
        assert plan.graphs[0].vertices == (cpu(1, 3), cpu(2, 3))
        assert len(plan.graphs) == 1

    def test_nearest_head_selection(self, chain_app, three_satellites):
        """The nearest rule places heads on the lowest satellite first."""
        capacities = InstanceCapacityTable({cpu(1, 1): 5.0, cpu(1, 3): 30.0,
                                            cpu(2, 1): 30.0, cpu(2, 3): 30.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 10, head_selection="nearest")
        assert plan.graphs[0].vertices == (cpu(1, 1), cpu(2, 1))
        assert plan.assigned_load[0] == pytest.approx(5.0)
        assert plan.graphs[1].vertices == (cpu(1, 3), cpu(2, 3))

    def test_unknown_head_selection(self, chain_app, three_satellites):
        with pytest.raises(ValueError):
            greedy_route(InstanceCapacityTable({}), three_satellites, chain_app, 1,
                         head_selection="random")

    def test_incomplete_when_capacity_runs_out(self, chain_app, three_satellites):
        capacities = InstanceCapacityTable({cpu(1, 1): 32.0, cpu(2, 1): 8.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 10)
        assert plan.status is RoutingStatus.INCOMPLETE
        assert plan.total_assigned == pytest.approx(8.0)
        assert plan.residual_capacities[cpu(2, 1)] == 0.0

    def test_zero_tiles(self, chain_app, three_satellites):
        capacities = InstanceCapacityTable({cpu(1, 1): 32.0, cpu(2, 1): 8.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 0)
        assert plan.is_complete
        assert plan.graphs == ()

    def test_no_instances(self, chain_app, three_satellites):
        plan = greedy_route(InstanceCapacityTable({}), three_satellites, chain_app, 5)
        assert plan.status is RoutingStatus.INCOMPLETE
        assert plan.graphs == ()

    def test_instance_outside_scenario(self, chain_app, three_satellites):
        with pytest.raises(PlanMismatch):
            greedy_route(InstanceCapacityTable({cpu(1, 7): 3.0}), three_satellites, chain_app, 1)

    def test_capacity_conservation(self, diamond_app, four_satellites):
        """Assigned load never exceeds any instance's capacity and residuals stay non-negative."""
        rng = np.random.default_rng(9)
        for _ in range(30):
            capacities = InstanceCapacityTable({
                Instance(i, j, d): float(rng.uniform(1.0, 30.0))
                for i in range(1, 5) for j in range(1, 5) for d in Device
                if rng.random() < 0.5
            } | {cpu(i, 1): 5.0 for i in range(1, 5)})
            plan = greedy_route(capacities, four_satellites, diamond_app, 60)
            loads = plan.instance_loads()
            for instance, load in loads.items():
                assert load <= capacities[instance] + 1e-6
            for instance, left in plan.residual_capacities.items():
                assert left >= 0.0
                assert left == pytest.approx(capacities[instance] - loads.get(instance, 0.0), abs=1e-6)
            assert plan.total_assigned <= 60 + 1e-9


class TestRandomRoute:
    """Test cases for random_route."""

    def test_deterministic_per_seed(self, diamond_app, four_satellites):
        capacities = InstanceCapacityTable({Instance(i, j, Device.CPU): 10.0
                                            for i in range(1, 5) for j in range(1, 5)})
        first = random_route(capacities, four_satellites, diamond_app, 20, seed=4)
        second = random_route(capacities, four_satellites, diamond_app, 20, seed=4)
        assert [g.vertices for g in first.graphs] == [g.vertices for g in second.graphs]
        assert first.assigned_load == second.assigned_load
        assert first.strategy == "random"

    def test_single_instance_per_function_matches_greedy(self, chain_app, three_satellites):
        """With one instance per function both strategies build the same graphs."""
        capacities = InstanceCapacityTable({cpu(1, 1): 32.0, cpu(2, 3): 32.0})
        greedy = greedy_route(capacities, three_satellites, chain_app, 10)
        rand = random_route(capacities, three_satellites, chain_app, 10, seed=1)
        assert [g.vertices for g in rand.graphs] == [g.vertices for g in greedy.graphs]
        assert rand.hop_tiles() == greedy.hop_tiles()

    @pytest.mark.parametrize("head_selection, head", [("capacity", cpu(1, 3)), ("nearest", cpu(1, 1))])
    def test_heads_follow_greedy_rule(self, chain_app, three_satellites, head_selection, head):
        """Only downstream instances are drawn at random."""
        capacities = InstanceCapacityTable({cpu(1, 1): 5.0, cpu(1, 3): 30.0, cpu(2, 1): 30.0,
                                            cpu(2, 2): 30.0, cpu(2, 3): 30.0})
        downstream = set()
        for seed in range(20):
            plan = random_route(capacities, three_satellites, chain_app, 4, seed=seed,
                                head_selection=head_selection)
            assert plan.graphs[0].vertex(1) == head
            downstream.add(plan.graphs[0].vertex(2))
        assert len(downstream) > 1

    def test_unknown_head_selection(self, chain_app, three_satellites):
        capacities = InstanceCapacityTable({cpu(1, 1): 32.0, cpu(2, 3): 32.0})
        with pytest.raises(ValueError):
            random_route(capacities, three_satellites, chain_app, 10, head_selection="random")

    def test_greedy_no_worse_on_average(self, diamond_app, four_satellites):
        capacities = InstanceCapacityTable({Instance(i, j, Device.CPU): 10.0
                                            for i in range(1, 5) for j in range(1, 5)})
        greedy = greedy_route(capacities, four_satellites, diamond_app, 20)
        random_hops = [random_route(capacities, four_satellites, diamond_app, 20, seed=s).hop_tiles()
                       for s in range(30)]
        assert greedy.hop_tiles() <= np.mean(random_hops)


class TestTotalHopTraffic:
    """Test cases for total_hop_traffic."""

    def test_request_and_response_counted(self, chain_app, three_satellites):
        capacities = InstanceCapacityTable({cpu(1, 1): 32.0, cpu(2, 3): 32.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 10)
        assert total_hop_traffic(plan, 1000, 1000) == pytest.approx(40_000.0)

    def test_co_located_graph_is_free(self, chain_app, three_satellites):
        capacities = InstanceCapacityTable({cpu(1, 2): 32.0, cpu(2, 2): 32.0})
        plan = greedy_route(capacities, three_satellites, chain_app, 10)
        assert total_hop_traffic(plan, 200, 200) == 0.0

    def test_negative_sizes(self, chain_app, three_satellites):
        plan = greedy_route(InstanceCapacityTable({cpu(1, 1): 3.0, cpu(2, 1): 3.0}),
                            three_satellites, chain_app, 1)
        with pytest.raises(ValueError):
            total_hop_traffic(plan, -1, 0)
