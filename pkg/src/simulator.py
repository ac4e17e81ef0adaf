"""
Discrete-event simulation of in-orbit analytics.

Every satellite captures a frame every ``frame_deadline`` seconds, offset by
``revisit_interval`` from the satellite ahead of it. Tiles of a frame are
spread over the routing plan's realization graphs and enter the head
instances at their satellite's capture time. CPU instances analyse at their
profiled speed; GPU instances analyse only inside their rotating time slices.
Results for downstream functions travel hop by hop over adjacent-satellite
links and are held at the receiving satellite until it has captured the same
frame. Each analysed tile sends a response back to the upstream satellite.

Frame deadlines are enforced per instance. A head instance must analyse the
tiles of frame F within ``frame_deadline`` seconds of its satellite capturing
F. A downstream instance gets one more ``frame_deadline`` after the latest
moment its upstream instances can hand frame F over, and never less than one
``frame_deadline`` after its own capture of F. Queues are served earliest
deadline first. A tile its instance cannot start before the deadline is
dropped and does not propagate; a started tile runs to completion, so a
fractional per-frame load dispatched as whole tiles finishes at most one
tile time late. An instance shared by several realization graphs is allowed
one more tile time per extra graph.

The simulation is deterministic: there is no randomness, and simultaneous
events run in scheduling order.
"""

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, DefaultDict, Dict, Iterator, List, Mapping, NamedTuple, Optional, Set, Tuple

import pandas as pd
import simpy

from .errors import PlanMismatch, ScenarioError
from .logging_config import LogContext, get_logger
from .models import Constellation, ValidatedApplication
from .planner import ACTIVE_THRESHOLD, DeploymentPlan, Device, Instance
from .profiles import FunctionProfile, eval_speed, resolve_profiles
from .routing import RoutingPlan

logger = get_logger(__name__)

DEADLINE_TOLERANCE = 1e-9
THINNING_TOLERANCE = 1e-9
WORK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SimScenario:
    """
    Everything one simulation run needs.

    Attributes:
        constellation: Satellites and timing
        app: Validated application
        profiles: Profiles keyed by profile reference
        deployment: Plan providing CPU quotas and GPU slices
        routing: Realization graphs and their loads
        num_frames: Frames each satellite captures
        link_bandwidth: Bits per second of every inter-satellite hop
        request_bytes: Size of a message forwarding a tile downstream
        response_bytes: Size of the result returned upstream
        background_noise: Fraction of CPU speed lost to background load
        tiles_per_frame: Tiles per frame; defaults to the routing plan's value
    """
    constellation: Constellation
    app: ValidatedApplication
    profiles: Mapping[str, FunctionProfile] = field(repr=False)
    deployment: DeploymentPlan = field(repr=False)
    routing: RoutingPlan = field(repr=False)
    num_frames: int = 96
    link_bandwidth: float = 50_000.0
    request_bytes: float = 200.0
    response_bytes: float = 200.0
    background_noise: float = 0.0
    tiles_per_frame: Optional[float] = None

    def __post_init__(self) -> None:
        if self.num_frames < 1:
            raise ScenarioError(f"num_frames must be at least 1, got {self.num_frames}")
        if self.link_bandwidth <= 0:
            raise ScenarioError("link_bandwidth must be positive")
        if self.request_bytes < 0 or self.response_bytes < 0:
            raise ScenarioError("message sizes must be non-negative")
        if not 0 <= self.background_noise < 1:
            raise ScenarioError(f"background_noise must lie in [0, 1), got {self.background_noise}")
        if self.tiles_per_frame is not None and self.tiles_per_frame < 0:
            raise ScenarioError("tiles_per_frame must be non-negative")

    @property
    def head_tiles(self) -> int:
        """Whole tiles entering the pipeline per frame."""
        tiles = self.routing.tiles_per_frame if self.tiles_per_frame is None else self.tiles_per_frame
        return int(math.floor(tiles + 1e-9))


@dataclass(frozen=True)
class FrameTiming:
    frame: int
    first_start: Optional[float]
    last_end: Optional[float]
    satellites: Tuple[int, ...]


class FrameLatency(NamedTuple):
    frame: int
    revisit: Optional[float]
    analysis: Optional[float]
    end_to_end: Optional[float]


class CompletionRatios(NamedTuple):
    per_function: Dict[int, float]
    application: float


@dataclass(frozen=True)
class MetricsReport:
    """
    Aggregated outcome of a simulation.

    Attributes:
        received: Tiles delivered to each function
        analyzed: Tiles each function finished analysing
        hop_bytes: Bytes sent over each directed adjacent-satellite link
        frames: Timing record of every frame
        gpu_busy: GPU seconds used on each satellite
        gpu_busy_per_period: GPU seconds per (satellite, frame period)
        revisit_interval: Seconds between consecutive satellites
        num_frames: Frames simulated
    """
    received: Dict[int, int]
    analyzed: Dict[int, int]
    hop_bytes: Dict[Tuple[int, int], float]
    frames: Tuple[FrameTiming, ...]
    gpu_busy: Dict[int, float]
    gpu_busy_per_period: Dict[Tuple[int, int], float]
    revisit_interval: float
    num_frames: int

    @property
    def total_bytes(self) -> float:
        return float(sum(self.hop_bytes.values()))

    @property
    def bytes_per_frame(self) -> float:
        return self.total_bytes / self.num_frames

    def dropped(self, function_id: int) -> int:
        return self.received[function_id] - self.analyzed[function_id]


class _Job(NamedTuple):
    graph: int
    frame: int
    function: int
    parent_satellite: Optional[int]
    deadline: float


@dataclass
class _InstanceRuntime:
    instance: Instance
    service_time: float
    queue: simpy.PriorityStore
    window_base: float = 0.0
    window: float = 0.0
    deadline_offset: float = 0.0

    @property
    def is_gpu(self) -> bool:
        return self.instance.device is Device.GPU

    def deadline(self, frame: int, frame_deadline: float) -> float:
        return frame * frame_deadline + self.deadline_offset

    def handover_delay(self, frame_deadline: float) -> float:
        """Latest finish of an admitted tile after its deadline."""
        # A GPU tile started at the end of a window resumes one period later
        if self.is_gpu:
            return frame_deadline + self.service_time
        return self.service_time

    def gpu_chunks(self, now: float, period: float) -> List[Tuple[int, float, float]]:
        """(period index, start, end) pieces of one tile's work inside the GPU windows."""
        work = self.service_time
        chunks = []
        p = max(0, math.floor((now - self.window_base) / period))
        while work > WORK_TOLERANCE:
            start = self.window_base + p * period
            end = start + self.window
            if now < end - WORK_TOLERANCE:
                begin = max(now, start)
                run = min(work, end - begin)
                chunks.append((p, begin, begin + run))
                work -= run
                now = begin + run
            p += 1
        return chunks


def _smooth_round_robin(weights: List[float]) -> Iterator[int]:
    current = [0.0] * len(weights)
    total = sum(weights)
    while True:
        for k, weight in enumerate(weights):
            current[k] += weight
        pick = max(range(len(weights)), key=lambda k: (current[k], -k))
        current[pick] -= total
        yield pick


def _check_consistency(scenario: SimScenario) -> None:
    app, plan = scenario.app, scenario.deployment
    expected = (app.num_functions, scenario.constellation.num_satellites)
    if plan.cpu_quota.shape != expected:
        raise PlanMismatch(f"deployment has shape {plan.cpu_quota.shape}, expected {expected}")
    for graph in scenario.routing.graphs:
        if len(graph.vertices) != app.num_functions:
            raise PlanMismatch(f"realization graph {graph.k} does not cover every function")
        for vertex in graph.vertices:
            if not 1 <= vertex.satellite <= expected[1]:
                raise PlanMismatch(f"instance {vertex} refers to an unknown satellite")
            value = (plan.quota(vertex.function, vertex.satellite) if vertex.device is Device.CPU
                     else plan.slice(vertex.function, vertex.satellite))
            if value <= ACTIVE_THRESHOLD:
                raise PlanMismatch(f"instance {vertex} is routed but not deployed")


class PipelineSimulation:
    """One simpy environment wired to a scenario."""

    def __init__(self, scenario: SimScenario):
        _check_consistency(scenario)
        self.scenario = scenario
        self.constellation = scenario.constellation
        self.app = scenario.app
        self.env = simpy.Environment()
        self.profiles = resolve_profiles(scenario.app, scenario.profiles)

        self.received: Dict[int, int] = {i: 0 for i in self.app.function_ids}
        self.analyzed: Dict[int, int] = {i: 0 for i in self.app.function_ids}
        self.hop_bytes: DefaultDict[Tuple[int, int], float] = defaultdict(float)
        self.gpu_busy: DefaultDict[int, float] = defaultdict(float)
        self.gpu_busy_per_period: DefaultDict[Tuple[int, int], float] = defaultdict(float)
        self._first_start: Dict[int, float] = {}
        self._last_end: Dict[int, float] = {}
        self._frame_satellites: DefaultDict[int, Set[int]] = defaultdict(set)
        self._thinning: DefaultDict[Tuple[int, int, int], float] = defaultdict(float)

        self._links = {}
        for j in range(1, self.constellation.num_satellites):
            self._links[(j, j + 1)] = simpy.Resource(self.env, capacity=1)
            self._links[(j + 1, j)] = simpy.Resource(self.env, capacity=1)

        self._sequence = itertools.count()

        self._runtimes: Dict[Instance, _InstanceRuntime] = {}
        for instance in scenario.routing.instances():
            self._runtimes[instance] = self._make_runtime(instance)
            self.env.process(self._serve(self._runtimes[instance]))
        self._assign_deadlines()

    def _make_runtime(self, instance: Instance) -> _InstanceRuntime:
        c, plan = self.constellation, self.scenario.deployment
        profile = self.profiles[instance.function]
        queue = simpy.PriorityStore(self.env)
        if instance.device is Device.CPU:
            quota = min(plan.quota(instance.function, instance.satellite), profile.max_cpu_quota)
            rate = eval_speed(profile.speed_cpu, quota) * (1 - self.scenario.background_noise)
            if rate <= 0:
                raise PlanMismatch(f"instance {instance} has zero processing speed")
            return _InstanceRuntime(instance, 1.0 / rate, queue)

        window = plan.slice(instance.function, instance.satellite)
        offset = float(plan.gpu_slice[:instance.function - 1, instance.satellite - 1].sum())
        return _InstanceRuntime(
            instance, 1.0 / profile.speed_gpu, queue,
            window_base=(instance.satellite - 1) * c.revisit_interval + offset, window=window,
        )

    def _transfer_time(self, source: int, target: int) -> float:
        hops = abs(target - source)
        return hops * self.scenario.request_bytes * 8 / self.scenario.link_bandwidth

    def _assign_deadlines(self) -> None:
        # Offsets of frame 0; parents are final before their children in topological order
        c = self.constellation
        period = c.frame_deadline
        graphs = self.scenario.routing.graphs
        for function_id in self.app.order:
            sharing: DefaultDict[Instance, int] = defaultdict(int)
            for graph in graphs:
                runtime = self._runtimes[graph.vertex(function_id)]
                sharing[runtime.instance] += 1
                ready = c.capture_time(runtime.instance.satellite, 0)
                for parent_id in self.app.parents(function_id):
                    parent = self._runtimes[graph.vertex(parent_id)]
                    handover = (parent.deadline_offset + parent.handover_delay(period)
                                + self._transfer_time(parent.instance.satellite,
                                                      runtime.instance.satellite))
                    ready = max(ready, handover)
                runtime.deadline_offset = max(runtime.deadline_offset, ready + period)
            # Whole-tile dispatch rounds every graph's load separately
            for instance, count in sharing.items():
                runtime = self._runtimes[instance]
                runtime.deadline_offset += (count - 1) * runtime.service_time

    def _enqueue(self, runtime: _InstanceRuntime, job: _Job) -> None:
        runtime.queue.put(simpy.PriorityItem((job.deadline, next(self._sequence)), job))

    def _job(self, graph: int, frame: int, function_id: int,
             parent_satellite: Optional[int]) -> Tuple[_InstanceRuntime, _Job]:
        runtime = self._runtimes[self.scenario.routing.graphs[graph].vertex(function_id)]
        deadline = runtime.deadline(frame, self.constellation.frame_deadline)
        return runtime, _Job(graph, frame, function_id, parent_satellite, deadline)

    def _arrivals(self) -> List[Tuple[float, int, int, int, int]]:
        # (time, frame, tile, head function, graph) for every head delivery
        routing = self.scenario.routing
        picker = _smooth_round_robin(list(routing.assigned_load))
        arrivals = []
        for frame in range(self.scenario.num_frames):
            for tile in range(self.scenario.head_tiles):
                k = next(picker)
                for head in self.app.heads:
                    sat = routing.graphs[k].vertex(head).satellite
                    arrivals.append((self.constellation.capture_time(sat, frame), frame, tile, head, k))
        arrivals.sort()
        return arrivals

    def _source(self) -> Iterator[Any]:
        for time, frame, _, head, k in self._arrivals():
            if time > self.env.now:
                yield self.env.timeout(time - self.env.now)
            self.received[head] += 1
            self._enqueue(*self._job(k, frame, head, None))

    def _transmit(self, source: int, target: int, size: float) -> Iterator[Any]:
        step = 1 if target > source else -1
        for a in range(source, target, step):
            with self._links[(a, a + step)].request() as request:
                yield request
                yield self.env.timeout(size * 8 / self.scenario.link_bandwidth)
            self.hop_bytes[(a, a + step)] += size

    def _deliver(self, source: int, runtime: _InstanceRuntime, job: _Job) -> Iterator[Any]:
        yield from self._transmit(source, runtime.instance.satellite, self.scenario.request_bytes)
        hold = self.constellation.capture_time(runtime.instance.satellite, job.frame)
        if hold > self.env.now:
            yield self.env.timeout(hold - self.env.now)
        self.received[job.function] += 1
        self._enqueue(runtime, job)

    def _forward(self, runtime: _InstanceRuntime, job: _Job) -> None:
        satellite = runtime.instance.satellite
        for child in self.app.children(job.function):
            key = (job.graph, job.function, child)
            acc = self._thinning[key] + self.app.ratio(job.function, child)
            if acc >= 1 - THINNING_TOLERANCE:
                acc -= 1.0
                target, child_job = self._job(job.graph, job.frame, child, satellite)
                self.env.process(self._deliver(satellite, target, child_job))
            self._thinning[key] = acc

    def _record(self, runtime: _InstanceRuntime, frame: int, start: float, end: float) -> None:
        self._first_start[frame] = min(self._first_start.get(frame, start), start)
        self._last_end[frame] = max(self._last_end.get(frame, end), end)
        self._frame_satellites[frame].add(runtime.instance.satellite)

    def _serve(self, runtime: _InstanceRuntime) -> Iterator[Any]:
        period = self.constellation.frame_deadline
        while True:
            item = yield runtime.queue.get()
            job: _Job = item.item
            chunks = runtime.gpu_chunks(self.env.now, period) if runtime.is_gpu else []
            start = chunks[0][1] if chunks else self.env.now
            if start >= job.deadline - DEADLINE_TOLERANCE:
                logger.debug("Dropped tile of frame %d at %s", job.frame, runtime.instance)
                continue

            if runtime.is_gpu:
                for p, begin, end in chunks:
                    self.gpu_busy[runtime.instance.satellite] += end - begin
                    self.gpu_busy_per_period[(runtime.instance.satellite, p)] += end - begin
                yield self.env.timeout(chunks[-1][2] - self.env.now)
            else:
                yield self.env.timeout(runtime.service_time)

            self.analyzed[job.function] += 1
            self._record(runtime, job.frame, start, self.env.now)
            self._forward(runtime, job)
            satellite = runtime.instance.satellite
            if job.parent_satellite is not None and job.parent_satellite != satellite:
                self.env.process(self._transmit(satellite, job.parent_satellite,
                                                self.scenario.response_bytes))

    def run(self) -> MetricsReport:
        scenario = self.scenario
        if scenario.routing.graphs:
            self.env.process(self._source())
            self.env.run()
        else:
            for head in self.app.heads:
                self.received[head] += scenario.head_tiles * scenario.num_frames

        frames = tuple(
            FrameTiming(
                frame,
                self._first_start.get(frame),
                self._last_end.get(frame),
                tuple(sorted(self._frame_satellites.get(frame, ()))),
            )
            for frame in range(scenario.num_frames)
        )
        return MetricsReport(
            received=dict(self.received),
            analyzed=dict(self.analyzed),
            hop_bytes=dict(sorted(self.hop_bytes.items())),
            frames=frames,
            gpu_busy=dict(sorted(self.gpu_busy.items())),
            gpu_busy_per_period=dict(sorted(self.gpu_busy_per_period.items())),
            revisit_interval=self.constellation.revisit_interval,
            num_frames=scenario.num_frames,
        )


def run(scenario: SimScenario) -> MetricsReport:
    """
    Simulate a scenario.

    Raises:
        PlanMismatch: the routing plan uses instances the deployment lacks
    """
    with LogContext(f"simulation of {scenario.num_frames} frames", logger):
        report = PipelineSimulation(scenario).run()
    logger.info("Simulated %d frames: %.0f inter-satellite bytes, application completion %.4f",
                report.num_frames, report.total_bytes, completion_ratio(report).application)
    return report


def completion_ratio(report: MetricsReport) -> CompletionRatios:
    """Analysed over received tiles per function; the application value is the minimum."""
    per_function = {
        i: (report.analyzed[i] / report.received[i] if report.received[i] else 1.0)
        for i in report.received
    }
    return CompletionRatios(per_function, min(per_function.values()))


def latency_breakdown(report: MetricsReport) -> List[FrameLatency]:
    """
    Split every frame's end-to-end duration into revisit and analysis parts.

    Revisit duration is the span between the lowest and highest satellite
    that analysed the frame, times the revisit interval. Frames nobody
    analysed have no latency.
    """
    rows = []
    for timing in report.frames:
        if timing.first_start is None or timing.last_end is None:
            rows.append(FrameLatency(timing.frame, None, None, None))
            continue
        end_to_end = timing.last_end - timing.first_start
        revisit = (max(timing.satellites) - min(timing.satellites)) * report.revisit_interval
        rows.append(FrameLatency(timing.frame, revisit, end_to_end - revisit, end_to_end))
    return rows


def metrics_frame(report: MetricsReport) -> pd.DataFrame:
    """One row per frame with revisit, analysis and end-to-end seconds."""
    rows = latency_breakdown(report)
    return pd.DataFrame({
        'frame': [r.frame for r in rows],
        'revisit_s': [r.revisit for r in rows],
        'analysis_s': [r.analysis for r in rows],
        'end_to_end_s': [r.end_to_end for r in rows],
    })


def summarize(report: MetricsReport) -> Dict[str, Any]:
    ratios = completion_ratio(report)
    latencies = [r.end_to_end for r in latency_breakdown(report) if r.end_to_end is not None]
    return {
        'num_frames': report.num_frames,
        'completion_ratio': {str(i): ratio for i, ratio in ratios.per_function.items()},
        'application_completion_ratio': ratios.application,
        'received_tiles': {str(i): n for i, n in report.received.items()},
        'analyzed_tiles': {str(i): n for i, n in report.analyzed.items()},
        'total_bytes': report.total_bytes,
        'bytes_per_frame': report.bytes_per_frame,
        'hop_bytes': {f"{a}->{b}": size for (a, b), size in report.hop_bytes.items()},
        'gpu_busy_seconds': {str(j): busy for j, busy in report.gpu_busy.items()},
        'mean_end_to_end_s': sum(latencies) / len(latencies) if latencies else None,
    }
