"""
Workload routing over realization graphs.

A realization graph picks exactly one instance per analytics function and
mirrors the application's edges between them. Its capacity is the smallest
instance capacity normalized by the function's flow. Routing splits the
per-frame tile count across realization graphs until every tile has a graph
or some function runs out of instances.

The greedy strategy places every downstream function on the instance with
the fewest inter-satellite hops from its upstream instance. The random
strategy draws instances uniformly and serves as a comparison baseline.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import MissingVertex, PlanMismatch
from .logging_config import LogContext, get_logger
from .models import Constellation, FlowTable, ValidatedApplication, compute_flows
from .planner import Device, Instance, InstanceCapacityTable

logger = get_logger(__name__)

RESIDUAL_TOLERANCE = 1e-9
HEAD_SELECTIONS = ("capacity", "nearest")

Link = Tuple[Instance, Instance]


class RoutingStatus(Enum):
    COMPLETE = "Complete"
    INCOMPLETE = "Incomplete"


@dataclass(frozen=True)
class RealizationGraph:
    """
    One routing unit.

    Attributes:
        k: Index of the graph in construction order
        vertices: One instance per function, ordered by function id
        links: (upstream, downstream) instance pairs, one per application edge
        capacity: Tiles per frame the graph could carry when it was built
        flows: Flow of every function per head tile
    """
    k: int
    vertices: Tuple[Instance, ...]
    links: Tuple[Link, ...]
    capacity: float
    flows: FlowTable = field(repr=False)

    def vertex(self, function_id: int) -> Instance:
        return self.vertices[function_id - 1]

    def hops(self) -> int:
        return sum(abs(up.satellite - down.satellite) for up, down in self.links)

    @property
    def satellites(self) -> Tuple[int, ...]:
        return tuple(sorted({v.satellite for v in self.vertices}))


@dataclass(frozen=True)
class RoutingPlan:
    """
    Realization graphs with their assigned per-frame loads.

    Attributes:
        graphs: Realization graphs in construction order
        assigned_load: Tiles per frame routed through each graph
        residual_capacities: Instance capacities left after assignment
        status: Complete when every tile has a graph
        tiles_per_frame: Requested tiles per frame
        strategy: "greedy" or "random"
    """
    graphs: Tuple[RealizationGraph, ...]
    assigned_load: Tuple[float, ...]
    residual_capacities: InstanceCapacityTable
    status: RoutingStatus
    tiles_per_frame: float
    strategy: str = "greedy"

    @property
    def total_assigned(self) -> float:
        return float(sum(self.assigned_load))

    @property
    def is_complete(self) -> bool:
        return self.status is RoutingStatus.COMPLETE

    def hop_tiles(self) -> float:
        """Tile transfers times hops, summed over every link of every graph."""
        total = 0.0
        for graph, load in zip(self.graphs, self.assigned_load):
            for up, down in graph.links:
                total += load * graph.flows[down.function] * abs(up.satellite - down.satellite)
        return total

    def instance_loads(self) -> Dict[Instance, float]:
        """Tiles per frame each instance receives across all graphs."""
        loads: Dict[Instance, float] = {}
        for graph, load in zip(self.graphs, self.assigned_load):
            for vertex in graph.vertices:
                loads[vertex] = loads.get(vertex, 0.0) + load * graph.flows[vertex.function]
        return loads

    def instances(self) -> List[Instance]:
        return sorted({v for g in self.graphs for v in g.vertices},
                      key=lambda inst: (inst.function, inst.satellite, inst.device.value))


def _as_vertex_map(vertices: Union[Mapping[int, Instance], Sequence[Instance]],
                   app: ValidatedApplication) -> Dict[int, Instance]:
    if isinstance(vertices, Mapping):
        by_function = dict(vertices)
    else:
        by_function = {}
        for vertex in vertices:
            if vertex.function in by_function:
                raise MissingVertex(
                    f"function {vertex.function} has more than one instance in the graph"
                )
            by_function[vertex.function] = vertex
    missing = [i for i in app.function_ids if i not in by_function]
    if missing:
        raise MissingVertex(f"no instance for functions {missing}")
    return by_function


def realization_graph_capacity(
    vertices: Union[Mapping[int, Instance], Sequence[Instance]],
    capacities: Mapping[Instance, float],
    app: ValidatedApplication,
) -> Tuple[float, FlowTable]:
    """
    Capacity of a realization graph in head tiles per frame.

    Args:
        vertices: One instance per function
        capacities: Tiles per frame of each instance
        app: Validated application

    Returns:
        (capacity, flows) where capacity is the smallest
        ``capacities[vertex] / flows[function]`` over all vertices

    Raises:
        MissingVertex: some function has no instance
        PlanMismatch: a vertex has no capacity entry
    """
    by_function = _as_vertex_map(vertices, app)
    flows = compute_flows(app)
    sigma = np.inf
    for function_id in app.function_ids:
        vertex = by_function[function_id]
        if vertex not in capacities:
            raise PlanMismatch(f"instance {vertex} is not deployed")
        sigma = min(sigma, capacities[vertex] / flows[function_id])
    return float(sigma), flows


def _device_order(instance: Instance) -> int:
    return 0 if instance.device is Device.CPU else 1


Chooser = Callable[[int, Optional[int], List[Instance], Dict[Instance, float]], Instance]


def _greedy_chooser(head_selection: str) -> Chooser:
    def choose(function_id: int, reference: Optional[int], candidates: List[Instance],
               residual: Dict[Instance, float]) -> Instance:
        if reference is None and head_selection == "capacity":
            return min(candidates, key=lambda c: (-residual[c], c.satellite, _device_order(c)))
        anchor = 0 if reference is None else reference
        return min(candidates, key=lambda c: (abs(c.satellite - anchor), -residual[c],
                                              _device_order(c), c.satellite))
    return choose


def _random_chooser(rng: np.random.Generator, head_selection: str) -> Chooser:
    head_rule = _greedy_chooser(head_selection)

    def choose(function_id: int, reference: Optional[int], candidates: List[Instance],
               residual: Dict[Instance, float]) -> Instance:
        # Heads take the greedy head rule; downstream instances are uniform
        if reference is None:
            return head_rule(function_id, reference, candidates, residual)
        return candidates[int(rng.integers(len(candidates)))]
    return choose


def _build_graph(app: ValidatedApplication, residual: Dict[Instance, float],
                 choose: Chooser) -> Optional[Dict[int, Instance]]:
    # BFS from the heads; a function is placed relative to the parent that reaches it first
    candidates_of: Dict[int, List[Instance]] = {i: [] for i in app.function_ids}
    for instance in sorted(residual, key=lambda c: (c.function, c.satellite, _device_order(c))):
        if residual[instance] > RESIDUAL_TOLERANCE:
            candidates_of[instance.function].append(instance)

    vertices: Dict[int, Instance] = {}
    queue: deque = deque()
    for head in app.heads:
        if not candidates_of[head]:
            logger.debug("No instance with residual capacity for head function %d", head)
            return None
        vertices[head] = choose(head, None, candidates_of[head], residual)
        queue.append(head)

    while queue:
        function_id = queue.popleft()
        reference = vertices[function_id].satellite
        for child in app.children(function_id):
            if child in vertices:
                continue
            if not candidates_of[child]:
                logger.debug("No instance with residual capacity for function %d", child)
                return None
            vertices[child] = choose(child, reference, candidates_of[child], residual)
            queue.append(child)
    return vertices


def _route(capacities: Mapping[Instance, float], constellation: Constellation,
           app: ValidatedApplication, tiles_per_frame: float, choose: Chooser,
           strategy: str) -> RoutingPlan:
    if tiles_per_frame < 0:
        raise ValueError(f"tiles_per_frame must be non-negative, got {tiles_per_frame}")
    for instance in capacities:
        if instance.satellite > constellation.num_satellites or instance.function > app.num_functions:
            raise PlanMismatch(f"instance {instance} lies outside the scenario")

    residual = {inst: max(0.0, float(cap)) for inst, cap in capacities.items()}
    remaining = float(tiles_per_frame)
    graphs: List[RealizationGraph] = []
    loads: List[float] = []
    status = RoutingStatus.COMPLETE

    with LogContext(f"{strategy} routing of {tiles_per_frame} tiles", logger, level='DEBUG'):
        while remaining > RESIDUAL_TOLERANCE:
            vertices = _build_graph(app, residual, choose)
            if vertices is None:
                status = RoutingStatus.INCOMPLETE
                break
            sigma, flows = realization_graph_capacity(vertices, residual, app)
            if sigma <= RESIDUAL_TOLERANCE:
                status = RoutingStatus.INCOMPLETE
                break

            load = min(sigma, remaining)
            for function_id, vertex in vertices.items():
                left = residual[vertex] - load * flows[function_id]
                if load >= sigma and residual[vertex] / flows[function_id] <= sigma:
                    left = 0.0
                residual[vertex] = left if left > RESIDUAL_TOLERANCE else 0.0
            remaining -= load

            links = tuple((vertices[e.source], vertices[e.target]) for e in app.edges)
            ordered = tuple(vertices[i] for i in app.function_ids)
            graphs.append(RealizationGraph(len(graphs), ordered, links, sigma, flows))
            loads.append(load)

    plan = RoutingPlan(tuple(graphs), tuple(loads), InstanceCapacityTable(residual), status,
                       float(tiles_per_frame), strategy)
    if status is RoutingStatus.INCOMPLETE:
        logger.info("%s routing incomplete: %.3f of %.3f tiles assigned",
                    strategy, plan.total_assigned, tiles_per_frame)
    else:
        logger.info("%s routing: %d graphs, %.3f hop-tiles", strategy, len(graphs), plan.hop_tiles())
    return plan


def greedy_route(
    capacities: Mapping[Instance, float],
    constellation: Constellation,
    app: ValidatedApplication,
    tiles_per_frame: float,
    head_selection: str = "capacity",
) -> RoutingPlan:
    """
    Route tiles through realization graphs that minimize inter-satellite hops.

    Every downstream function takes the instance closest to its upstream
    instance's satellite; ties go to larger residual capacity, then CPU, then
    the lower satellite index.

    Args:
        capacities: Instance capacities from a verified plan
        constellation: Satellites and timing
        app: Validated application
        tiles_per_frame: Head tiles per frame to route
        head_selection: "capacity" places heads on the instance with the
            largest residual capacity; "nearest" on the lowest satellite index

    Returns:
        RoutingPlan; Incomplete when capacity ran out before every tile was
        assigned
    """
    if head_selection not in HEAD_SELECTIONS:
        raise ValueError(f"head_selection must be one of {HEAD_SELECTIONS}, got {head_selection!r}")
    return _route(capacities, constellation, app, tiles_per_frame,
                  _greedy_chooser(head_selection), "greedy")


def random_route(
    capacities: Mapping[Instance, float],
    constellation: Constellation,
    app: ValidatedApplication,
    tiles_per_frame: float,
    seed: int = 0,
    head_selection: str = "capacity",
) -> RoutingPlan:
    """
    Route like ``greedy_route`` but pick downstream instances uniformly at random.

    Heads are placed with the same ``head_selection`` rule as the greedy
    router.
    """
    if head_selection not in HEAD_SELECTIONS:
        raise ValueError(f"head_selection must be one of {HEAD_SELECTIONS}, got {head_selection!r}")
    rng = np.random.default_rng(seed)
    return _route(capacities, constellation, app, tiles_per_frame,
                  _random_chooser(rng, head_selection), "random")


def total_hop_traffic(plan: RoutingPlan, request_bytes: float, response_bytes: float) -> float:
    """
    Inter-satellite bytes per frame predicted by a routing plan.

    Every tile crossing a link sends a request downstream and a response
    back; each is counted once per hop.
    """
    if request_bytes < 0 or response_bytes < 0:
        raise ValueError("message sizes must be non-negative")
    return plan.hop_tiles() * (request_bytes + response_bytes)
