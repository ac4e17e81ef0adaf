"""
Domain models for in-orbit analytics applications and constellations.

An analytics application is a DAG of analytics functions whose edges carry
distribution ratios: the fraction of tiles an upstream function forwards to
a downstream one. A constellation is an ordered leader-follower chain of
satellites that pass over the same ground track ``revisit_interval`` seconds
apart and capture one frame every ``frame_deadline`` seconds.

Classes:
    AnalyticsFunction: One analysis module (a DAG node)
    ApplicationEdge: Directed edge with a distribution ratio
    ApplicationGraph: Unvalidated functions and edges
    ValidatedApplication: Application with a verified topological order
    FlowTable: Fraction of one head tile reaching each function
    Satellite: Onboard CPU, memory and GPU resources
    Constellation: Satellites plus timing and discount parameters

Example:
    >>> graph = ApplicationGraph(
    ...     functions=[AnalyticsFunction(1, "cloud", "cloud"),
    ...                AnalyticsFunction(2, "landuse", "landuse")],
    ...     edges=[(1, 2, 0.5)],
    ... )
    >>> app = validate_application(graph)
    >>> dict(compute_flows(app))
    {1: 1.0, 2: 0.5}
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

from .errors import (
    CycleDetected, InvalidFunctionIds, InvalidRatio, ScenarioError, UnknownFunctionId
)
from .logging_config import get_logger

logger = get_logger(__name__)

EdgeLike = Union["ApplicationEdge", Tuple[int, int, float]]


@dataclass(frozen=True)
class AnalyticsFunction:
    """
    One analytics function of an application.

    Attributes:
        id: 1-based index, topologically ordered
        name: Human readable name
        profile_ref: Key into the profile registry
    """
    id: int
    name: str
    profile_ref: str


@dataclass(frozen=True)
class ApplicationEdge:
    """Edge ``source -> target`` forwarding ``ratio`` of the source's tiles."""
    source: int
    target: int
    ratio: float


@dataclass
class ApplicationGraph:
    """Raw application description; see ``validate_application``."""
    functions: List[AnalyticsFunction]
    edges: List[ApplicationEdge] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.edges = [
            edge if isinstance(edge, ApplicationEdge) else ApplicationEdge(*edge)
            for edge in self.edges
        ]


@dataclass(frozen=True)
class ValidatedApplication:
    """
    Application graph whose structure has been checked.

    Attributes:
        functions: Functions ordered by id
        edges: Edges ordered by (source, target)
        order: Topological order of function ids
        heads: Functions with in-degree zero
    """
    functions: Tuple[AnalyticsFunction, ...]
    edges: Tuple[ApplicationEdge, ...]
    order: Tuple[int, ...]
    heads: Tuple[int, ...]
    dag: nx.DiGraph = field(repr=False, compare=False, hash=False)

    @property
    def num_functions(self) -> int:
        return len(self.functions)

    @property
    def function_ids(self) -> Tuple[int, ...]:
        return tuple(f.id for f in self.functions)

    def function(self, function_id: int) -> AnalyticsFunction:
        return self.functions[function_id - 1]

    def children(self, function_id: int) -> List[int]:
        return sorted(self.dag.successors(function_id))

    def parents(self, function_id: int) -> List[int]:
        return sorted(self.dag.predecessors(function_id))

    def ratio(self, source: int, target: int) -> float:
        return float(self.dag.edges[source, target]['ratio'])


class FlowTable(Mapping[int, float]):
    """Read-only map from function id to its flow value."""

    def __init__(self, flows: Mapping[int, float]):
        self._flows = dict(sorted(flows.items()))

    def __getitem__(self, function_id: int) -> float:
        return self._flows[function_id]

    def __iter__(self) -> Iterator[int]:
        return iter(self._flows)

    def __len__(self) -> int:
        return len(self._flows)

    def __repr__(self) -> str:
        return f"FlowTable({self._flows})"


@dataclass(frozen=True)
class Satellite:
    """
    Resources of one satellite.

    When both ``cpu_memory`` and ``gpu_memory`` are given, the planner uses
    separate RAM and VRAM constraints instead of the combined ``memory`` one.

    Attributes:
        id: 1-based position in movement order
        cpu_cores: Available CPU cores
        memory: Combined memory in bytes
        has_gpu: Whether a GPU is onboard
        cpu_memory: Optional RAM capacity in bytes
        gpu_memory: Optional VRAM capacity in bytes
    """
    id: int
    cpu_cores: float
    memory: float
    has_gpu: bool = False
    cpu_memory: Optional[float] = None
    gpu_memory: Optional[float] = None

    def __post_init__(self) -> None:
        if self.cpu_cores <= 0:
            raise ScenarioError(f"satellite {self.id}: cpu_cores must be positive")
        if self.memory <= 0:
            raise ScenarioError(f"satellite {self.id}: memory must be positive")
        if (self.cpu_memory is None) != (self.gpu_memory is None):
            raise ScenarioError(
                f"satellite {self.id}: split memory needs both cpu_memory and gpu_memory"
            )
        for name in ('cpu_memory', 'gpu_memory'):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ScenarioError(f"satellite {self.id}: {name} must be positive")

    @property
    def split_memory(self) -> bool:
        return self.cpu_memory is not None


@dataclass(frozen=True)
class Constellation:
    """
    Leader-follower constellation.

    Attributes:
        satellites: Satellites in movement order, ids 1..N
        frame_deadline: Seconds between captures of one satellite
        revisit_interval: Seconds between consecutive satellites passing the
            same ground location
        alpha: GPU context-switching discount in (0, 1]
        beta: CPU availability discount in (0, 1]
    """
    satellites: Tuple[Satellite, ...]
    frame_deadline: float
    revisit_interval: float
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'satellites', tuple(self.satellites))
        if not self.satellites:
            raise ScenarioError("constellation needs at least one satellite")
        ids = [s.id for s in self.satellites]
        if ids != list(range(1, len(ids) + 1)):
            raise ScenarioError(f"satellite ids must be 1..N in movement order, got {ids}")
        if self.frame_deadline <= 0:
            raise ScenarioError("frame_deadline must be positive")
        if self.revisit_interval <= 0:
            raise ScenarioError("revisit_interval must be positive")
        for name in ('alpha', 'beta'):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ScenarioError(f"{name} must lie in (0, 1], got {value}")

    @property
    def num_satellites(self) -> int:
        return len(self.satellites)

    def satellite(self, satellite_id: int) -> Satellite:
        return self.satellites[satellite_id - 1]

    def capture_time(self, satellite_id: int, frame: int) -> float:
        """Time at which ``satellite_id`` captures ``frame``."""
        return frame * self.frame_deadline + (satellite_id - 1) * self.revisit_interval


def validate_application(graph: ApplicationGraph) -> ValidatedApplication:
    """
    Check an application graph and attach its topological order.

    Args:
        graph: Functions and edges to validate

    Returns:
        ValidatedApplication

    Raises:
        InvalidFunctionIds: ids are not 1..N or not topologically ordered
        UnknownFunctionId: an edge endpoint is not a declared function
        InvalidRatio: a ratio lies outside (0, 1]
        CycleDetected: the graph has a directed cycle
    """
    functions = sorted(graph.functions, key=lambda f: f.id)
    ids = [f.id for f in functions]
    if not ids:
        raise InvalidFunctionIds("application needs at least one function")
    if ids != list(range(1, len(ids) + 1)):
        raise InvalidFunctionIds(f"function ids must form 1..{len(ids)}, got {ids}")

    dag = nx.DiGraph()
    dag.add_nodes_from(ids)
    for edge in graph.edges:
        for endpoint in (edge.source, edge.target):
            if endpoint not in dag:
                raise UnknownFunctionId(
                    f"edge {edge.source}->{edge.target} references unknown function {endpoint}"
                )
        if not 0 < edge.ratio <= 1:
            raise InvalidRatio(
                f"edge {edge.source}->{edge.target}: ratio {edge.ratio} outside (0, 1]"
            )
        if dag.has_edge(edge.source, edge.target):
            raise InvalidRatio(f"duplicate edge {edge.source}->{edge.target}")
        dag.add_edge(edge.source, edge.target, ratio=float(edge.ratio))

    if not nx.is_directed_acyclic_graph(dag):
        cycle = nx.find_cycle(dag)
        raise CycleDetected(f"application graph has a cycle: {cycle}")

    for source, target in dag.edges:
        if source >= target:
            raise InvalidFunctionIds(
                f"edge {source}->{target} breaks the topological numbering of function ids"
            )

    order = tuple(nx.lexicographical_topological_sort(dag))
    heads = tuple(i for i in ids if dag.in_degree(i) == 0)
    edges = tuple(sorted(graph.edges, key=lambda e: (e.source, e.target)))

    logger.debug("Validated application: %d functions, heads=%s", len(ids), heads)
    return ValidatedApplication(
        functions=tuple(functions), edges=edges, order=order, heads=heads, dag=dag
    )


def compute_flows(app: ValidatedApplication) -> FlowTable:
    """
    Fraction of one head tile reaching each function.

    Heads receive 1. A function with several parents sums the contributions
    forwarded by each parent.
    """
    flows: Dict[int, float] = {}
    for function_id in app.order:
        parents = app.parents(function_id)
        if not parents:
            flows[function_id] = 1.0
        else:
            flows[function_id] = sum(
                app.ratio(parent, function_id) * flows[parent] for parent in parents
            )
    return FlowTable(flows)


def compute_frame_workloads(flows: Mapping[int, float], tiles_per_frame: float) -> Dict[int, float]:
    """Tiles each function must analyse per frame, kept real valued."""
    if tiles_per_frame < 0:
        raise ScenarioError(f"tiles_per_frame must be non-negative, got {tiles_per_frame}")
    return {function_id: tiles_per_frame * flow for function_id, flow in flows.items()}


def build_application(
    functions: Sequence[Tuple[int, str, str]], edges: Sequence[Tuple[int, int, float]]
) -> ValidatedApplication:
    """Shorthand for validating an application from plain tuples."""
    return validate_application(ApplicationGraph(
        functions=[AnalyticsFunction(*f) for f in functions],
        edges=[ApplicationEdge(*e) for e in edges],
    ))
