"""
Analytics function deployment planning.

The planner decides, for every analytics function and satellite, a CPU quota
(cores) and a GPU time slice (seconds per frame). It maximizes the smallest
per-function capacity margin

    margin_i = sum_j (f_i(r_ij) * frame_deadline + v_gpu_i * t_ij) - N_i

subject to GPU time, CPU, memory and minimum-quota constraints, with binary
indicators for active CPU and GPU instances. Concave speed models are
encoded as a hypograph without extra binaries; other models select one
segment per instance with binaries.

Baseline placements (compute parallelism and data parallelism), capacity
tables and analyzable-tile sweeps live here as well.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .branch_and_bound import BranchAndBound, MILPStatus, MixedBinaryProgram
from .errors import DimensionMismatch, NotEnoughSatellites
from .logging_config import LogContext, get_logger, log_function_call
from .models import Constellation, ValidatedApplication, compute_flows, compute_frame_workloads
from .profiles import FunctionProfile, eval_speed, is_concave, resolve_profiles

logger = get_logger(__name__)

SolverStatus = MILPStatus

GPU_SLICE_EPSILON = 1e-6
ACTIVE_THRESHOLD = 1e-9
VERIFY_TOLERANCE = 1e-6


class Device(Enum):
    CPU = "cpu"
    GPU = "gpu"


class Instance(NamedTuple):
    """Analytics function instance: function ``function`` on ``satellite`` using ``device``."""
    function: int
    satellite: int
    device: Device


@dataclass(frozen=True)
class SolverStats:
    nodes_explored: int = 0
    lp_solves: int = 0
    wall_time: float = 0.0
    method: str = "branch-and-bound"


@dataclass(frozen=True, eq=False)
class DeploymentPlan:
    """
    CPU quota and GPU slice matrices, rows are functions and columns satellites.

    Attributes:
        cpu_quota: Cores given to function i on satellite j (row i-1, column j-1)
        gpu_slice: GPU seconds per frame given to function i on satellite j
        objective_margin: Smallest per-function margin in tiles; None when
            infeasible or not evaluated
        status: Optimal, Feasible or Infeasible
        stats: Solver statistics
        placement: "optimized", "compute-parallel" or "data-parallel"
    """
    cpu_quota: np.ndarray
    gpu_slice: np.ndarray
    objective_margin: Optional[float]
    status: SolverStatus
    stats: SolverStats = field(default_factory=SolverStats)
    placement: str = "optimized"

    def __post_init__(self) -> None:
        cpu = np.array(self.cpu_quota, dtype=float, ndmin=2)
        gpu = np.array(self.gpu_slice, dtype=float, ndmin=2)
        if cpu.shape != gpu.shape:
            raise DimensionMismatch(
                f"cpu_quota shape {cpu.shape} differs from gpu_slice shape {gpu.shape}"
            )
        cpu.setflags(write=False)
        gpu.setflags(write=False)
        object.__setattr__(self, 'cpu_quota', cpu)
        object.__setattr__(self, 'gpu_slice', gpu)

    @classmethod
    def empty(cls, num_functions: int, num_satellites: int,
              status: SolverStatus = SolverStatus.INFEASIBLE,
              stats: Optional[SolverStats] = None, placement: str = "optimized") -> "DeploymentPlan":
        zeros = np.zeros((num_functions, num_satellites))
        return cls(zeros, zeros.copy(), None, status, stats or SolverStats(), placement)

    @property
    def num_functions(self) -> int:
        return int(self.cpu_quota.shape[0])

    @property
    def num_satellites(self) -> int:
        return int(self.cpu_quota.shape[1])

    @property
    def is_feasible(self) -> bool:
        return self.status is not SolverStatus.INFEASIBLE

    def quota(self, function_id: int, satellite_id: int) -> float:
        return float(self.cpu_quota[function_id - 1, satellite_id - 1])

    def slice(self, function_id: int, satellite_id: int) -> float:
        return float(self.gpu_slice[function_id - 1, satellite_id - 1])


class InstanceCapacityTable(Mapping[Instance, float]):
    """Tiles per frame each active instance can analyse."""

    def __init__(self, capacities: Optional[Mapping[Instance, float]] = None):
        self._capacities: Dict[Instance, float] = {}
        for instance, value in (capacities or {}).items():
            self._capacities[Instance(instance[0], instance[1], Device(instance[2]))] = float(value)

    def __getitem__(self, instance: Instance) -> float:
        return self._capacities[instance]

    def __iter__(self) -> Iterator[Instance]:
        return iter(sorted(self._capacities, key=_instance_key))

    def __len__(self) -> int:
        return len(self._capacities)

    def __repr__(self) -> str:
        return f"InstanceCapacityTable({dict(self.items())})"

    def instances_of(self, function_id: int) -> List[Instance]:
        return [inst for inst in self if inst.function == function_id]

    def total_for(self, function_id: int) -> float:
        return sum(self._capacities[inst] for inst in self.instances_of(function_id))

    def copy(self) -> Dict[Instance, float]:
        return dict(self._capacities)


def _instance_key(instance: Instance) -> Tuple[int, int, int]:
    return instance.function, instance.satellite, 0 if instance.device is Device.CPU else 1


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    passed: bool
    worst_slack: float
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    checks: Tuple[ConstraintCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> ConstraintCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def failed(self) -> List[ConstraintCheck]:
        return [check for check in self.checks if not check.passed]


class _ProgramBuilder:
    """Accumulates variables and sparse rows of a mixed binary program."""

    def __init__(self) -> None:
        self.bounds: List[Tuple[float, Optional[float]]] = []
        self.binaries: List[int] = []
        self._ub: List[Tuple[Dict[int, float], float]] = []
        self._eq: List[Tuple[Dict[int, float], float]] = []

    def var(self, lower: float, upper: Optional[float], binary: bool = False) -> int:
        self.bounds.append((lower, upper))
        if binary:
            self.binaries.append(len(self.bounds) - 1)
        return len(self.bounds) - 1

    def le(self, coefs: Dict[int, float], rhs: float) -> None:
        self._ub.append((coefs, rhs))

    def eq(self, coefs: Dict[int, float], rhs: float) -> None:
        self._eq.append((coefs, rhs))

    @staticmethod
    def _dense(rows: List[Tuple[Dict[int, float], float]], n: int) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        if not rows:
            return None, None
        matrix = np.zeros((len(rows), n))
        for r, (coefs, _) in enumerate(rows):
            for idx, value in coefs.items():
                matrix[r, idx] += value
        return matrix, np.array([rhs for _, rhs in rows], dtype=float)

    def build(self, objective: Dict[int, float]) -> MixedBinaryProgram:
        n = len(self.bounds)
        c = np.zeros(n)
        for idx, value in objective.items():
            c[idx] = value
        A_ub, b_ub = self._dense(self._ub, n)
        A_eq, b_eq = self._dense(self._eq, n)
        return MixedBinaryProgram(c=c, bounds=list(self.bounds), binaries=list(self.binaries),
                                  A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq)


@dataclass
class _InstanceVars:
    x_cpu: Optional[int] = None
    quota: Optional[int] = None
    speed: Optional[int] = None
    quota_cap: float = 0.0
    x_gpu: Optional[int] = None
    slice: Optional[int] = None


class DeploymentModel:
    """
    Mixed binary program of the deployment problem for one scenario.

    Memory rows are normalized by the satellite's capacity to keep the LP
    well scaled.
    """

    def __init__(self, constellation: Constellation, app: ValidatedApplication,
                 profiles: Mapping[str, FunctionProfile], workloads: Mapping[int, float]):
        self.constellation = constellation
        self.app = app
        self.profiles = resolve_profiles(app, profiles)
        self.workloads = {i: float(workloads.get(i, 0.0)) for i in app.function_ids}
        self._builder = _ProgramBuilder()
        self._vars: Dict[Tuple[int, int], _InstanceVars] = {}
        self._margin = -1
        self.program = self._build()

    def _cpu_memory_fits(self, profile: FunctionProfile, sat_id: int) -> bool:
        sat = self.constellation.satellite(sat_id)
        capacity = sat.cpu_memory if sat.split_memory else sat.memory
        return float(profile.cpu_memory) <= capacity

    def _gpu_memory_fits(self, profile: FunctionProfile, sat_id: int) -> bool:
        sat = self.constellation.satellite(sat_id)
        capacity = sat.gpu_memory if sat.split_memory else sat.memory
        return float(profile.gpu_memory) <= capacity

    def _add_cpu_instance(self, i: int, j: int, profile: FunctionProfile, slot: _InstanceVars) -> None:
        b = self._builder
        sat = self.constellation.satellite(j)
        cap = min(self.constellation.beta * sat.cpu_cores, profile.max_cpu_quota)
        lb = profile.min_cpu_quota
        if cap < lb or not self._cpu_memory_fits(profile, j):
            return

        x = b.var(0.0, 1.0, binary=True)
        r = b.var(0.0, cap)
        v = b.var(0.0, None)
        b.le({r: 1.0, x: -cap}, 0.0)
        b.le({x: lb, r: -1.0}, 0.0)

        model = profile.speed_cpu
        if is_concave(model):
            for seg in model.segments:
                b.le({v: 1.0, r: -seg.slope, x: -seg.intercept}, 0.0)
        else:
            quota_sum: Dict[int, float] = {r: 1.0}
            choice_sum: Dict[int, float] = {x: -1.0}
            speed_row: Dict[int, float] = {v: 1.0}
            for seg in model.segments:
                hi = min(seg.quota_hi, cap)
                fixed_off = hi < seg.quota_lo
                z = b.var(0.0, 0.0 if fixed_off else 1.0, binary=True)
                rho = b.var(0.0, max(hi, 0.0))
                b.le({rho: 1.0, z: -max(hi, 0.0)}, 0.0)
                b.le({z: seg.quota_lo, rho: -1.0}, 0.0)
                quota_sum[rho] = -1.0
                choice_sum[z] = 1.0
                speed_row[rho] = -seg.slope
                speed_row[z] = -seg.intercept
            b.eq(quota_sum, 0.0)
            b.eq(choice_sum, 0.0)
            b.le(speed_row, 0.0)

        slot.x_cpu, slot.quota, slot.speed, slot.quota_cap = x, r, v, cap

    def _add_gpu_instance(self, i: int, j: int, profile: FunctionProfile, slot: _InstanceVars) -> None:
        b = self._builder
        c = self.constellation
        sat = c.satellite(j)
        window = c.alpha * c.frame_deadline
        if (not sat.has_gpu or profile.speed_gpu <= 0
                or profile.gpu_base_cpu_quota > c.beta * sat.cpu_cores
                or window < GPU_SLICE_EPSILON or not self._gpu_memory_fits(profile, j)):
            return

        y = b.var(0.0, 1.0, binary=True)
        t = b.var(0.0, window)
        b.le({t: 1.0, y: -window}, 0.0)
        b.le({y: GPU_SLICE_EPSILON, t: -1.0}, 0.0)
        slot.x_gpu, slot.slice = y, t

    def _build(self) -> MixedBinaryProgram:
        b = self._builder
        c = self.constellation
        sat_ids = [s.id for s in c.satellites]

        for i in self.app.function_ids:
            for j in sat_ids:
                slot = _InstanceVars()
                self._add_cpu_instance(i, j, self.profiles[i], slot)
                self._add_gpu_instance(i, j, self.profiles[i], slot)
                self._vars[(i, j)] = slot

        self._margin = b.var(0.0, None)

        for j in sat_ids:
            sat = c.satellite(j)
            gpu_time = {self._vars[(i, j)].slice: 1.0 for i in self.app.function_ids
                        if self._vars[(i, j)].slice is not None}
            if gpu_time:
                b.le(gpu_time, c.alpha * c.frame_deadline)

            cpu_row: Dict[int, float] = {}
            ram_row: Dict[int, float] = {}
            vram_row: Dict[int, float] = {}
            ram_cap = sat.cpu_memory if sat.split_memory else sat.memory
            vram_cap = sat.gpu_memory if sat.split_memory else sat.memory
            for i in self.app.function_ids:
                slot, profile = self._vars[(i, j)], self.profiles[i]
                if slot.quota is not None:
                    cpu_row[slot.quota] = 1.0
                    ram_row[slot.x_cpu] = float(profile.cpu_memory) / ram_cap
                if slot.x_gpu is not None:
                    cpu_row[slot.x_gpu] = profile.gpu_base_cpu_quota
                    vram_row[slot.x_gpu] = float(profile.gpu_memory) / vram_cap
            if cpu_row:
                b.le(cpu_row, c.beta * sat.cpu_cores)
            if sat.split_memory:
                if ram_row:
                    b.le(ram_row, 1.0)
                if vram_row:
                    b.le(vram_row, 1.0)
            elif ram_row or vram_row:
                b.le({**ram_row, **vram_row}, 1.0)

        for i in self.app.function_ids:
            row: Dict[int, float] = {self._margin: 1.0}
            for j in sat_ids:
                slot = self._vars[(i, j)]
                if slot.speed is not None:
                    row[slot.speed] = -c.frame_deadline
                if slot.slice is not None:
                    row[slot.slice] = -self.profiles[i].speed_gpu
            b.le(row, -self.workloads[i])

        return b.build({self._margin: -1.0})

    def extract(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        """Quota matrix, slice matrix and margin from a program solution."""
        n_m, n_s = self.app.num_functions, self.constellation.num_satellites
        cpu, gpu = np.zeros((n_m, n_s)), np.zeros((n_m, n_s))
        window = self.constellation.alpha * self.constellation.frame_deadline
        for (i, j), slot in self._vars.items():
            if slot.x_cpu is not None and x[slot.x_cpu] > 0.5:
                lb = self.profiles[i].min_cpu_quota
                cpu[i - 1, j - 1] = min(max(x[slot.quota], lb), slot.quota_cap)
            if slot.x_gpu is not None and x[slot.x_gpu] > 0.5:
                gpu[i - 1, j - 1] = min(max(x[slot.slice], GPU_SLICE_EPSILON), window)
        return cpu, gpu, float(x[self._margin])


@log_function_call
def solve_deployment(
    constellation: Constellation,
    app: ValidatedApplication,
    profiles: Mapping[str, FunctionProfile],
    workloads: Mapping[int, float],
    solver: Optional[BranchAndBound] = None,
    first_feasible: bool = False,
) -> DeploymentPlan:
    """
    Allocate CPU quotas and GPU slices maximizing the smallest capacity margin.

    Args:
        constellation: Satellites and timing
        app: Validated application
        profiles: Profiles keyed by profile reference
        workloads: Tiles per frame for every function id
        solver: Branch-and-bound configuration; defaults are used when None
        first_feasible: Accept the first feasible plan (feasibility checks)

    Returns:
        DeploymentPlan; an all-zero plan with Infeasible status when no
        allocation meets every workload

    Raises:
        MissingProfile: a function's profile is absent
        NumericFailure: the LP solver failed
    """
    for i, load in workloads.items():
        if not np.isfinite(load):
            raise ValueError(f"workload of function {i} is not finite")

    model = DeploymentModel(constellation, app, profiles, workloads)
    solver = solver or BranchAndBound()
    with LogContext(f"deployment solve ({app.num_functions} functions x "
                    f"{constellation.num_satellites} satellites, "
                    f"{model.program.num_binaries} binaries)", logger, level='DEBUG'):
        result = solver.solve(model.program, first_feasible=first_feasible)

    stats = SolverStats(result.nodes_explored, result.lp_solves, result.wall_time, result.method)
    if result.status is MILPStatus.INFEASIBLE or result.x is None:
        logger.info("Deployment infeasible after %d nodes", result.nodes_explored)
        return DeploymentPlan.empty(app.num_functions, constellation.num_satellites,
                                    SolverStatus.INFEASIBLE, stats)

    cpu, gpu, margin = model.extract(result.x)
    logger.info("Deployment %s: margin %.4f tiles, %d nodes, %.2fs",
                result.status.value, margin, result.nodes_explored, result.wall_time)
    return DeploymentPlan(cpu, gpu, margin, result.status, stats)


def _check_dimensions(plan: DeploymentPlan, constellation: Constellation,
                      app: ValidatedApplication) -> None:
    expected = (app.num_functions, constellation.num_satellites)
    if plan.cpu_quota.shape != expected:
        raise DimensionMismatch(f"plan has shape {plan.cpu_quota.shape}, expected {expected}")


def _function_capacity(plan: DeploymentPlan, i: int, profile: FunctionProfile,
                       frame_deadline: float) -> float:
    total = 0.0
    for j in range(1, plan.num_satellites + 1):
        r, t = plan.quota(i, j), plan.slice(i, j)
        if r > ACTIVE_THRESHOLD:
            total += eval_speed(profile.speed_cpu, min(r, profile.max_cpu_quota)) * frame_deadline
        total += profile.speed_gpu * t
    return total


def plan_margins(plan: DeploymentPlan, constellation: Constellation, app: ValidatedApplication,
                 profiles: Mapping[str, FunctionProfile],
                 workloads: Mapping[int, float]) -> Dict[int, float]:
    """Capacity minus workload per function, using the speed models."""
    _check_dimensions(plan, constellation, app)
    resolved = resolve_profiles(app, profiles)
    return {
        i: _function_capacity(plan, i, resolved[i], constellation.frame_deadline)
        - float(workloads.get(i, 0.0))
        for i in app.function_ids
    }


def _slack_check(name: str, slacks: Sequence[float], scales: Sequence[float],
                 detail: str) -> ConstraintCheck:
    if not slacks:
        return ConstraintCheck(name, True, 0.0, detail)
    worst = int(np.argmin(slacks))
    tolerance = VERIFY_TOLERANCE * max(1.0, abs(scales[worst]))
    return ConstraintCheck(name, slacks[worst] >= -tolerance, float(slacks[worst]), detail)


def verify_plan(plan: DeploymentPlan, constellation: Constellation, app: ValidatedApplication,
                profiles: Mapping[str, FunctionProfile],
                workloads: Mapping[int, float]) -> VerificationReport:
    """
    Re-check every deployment constraint on a plan.

    Args:
        plan: Plan to check
        constellation: Satellites and timing
        app: Validated application
        profiles: Profiles keyed by profile reference
        workloads: Tiles per frame for every function id

    Returns:
        VerificationReport with one entry per constraint family

    Raises:
        DimensionMismatch: plan shape does not match the inputs
    """
    _check_dimensions(plan, constellation, app)
    resolved = resolve_profiles(app, profiles)
    c = constellation
    cpu, gpu = plan.cpu_quota, plan.gpu_slice
    window = c.alpha * c.frame_deadline
    sat_ids = [s.id for s in c.satellites]
    checks = []

    checks.append(_slack_check(
        "non_negative", [float(min(cpu.min(), gpu.min()))], [1.0], "all entries >= 0"))

    no_gpu = [-plan.slice(i, j) for i in app.function_ids for j in sat_ids
              if not c.satellite(j).has_gpu]
    checks.append(_slack_check("gpu_availability", no_gpu, [1.0] * len(no_gpu),
                               "no GPU slices on satellites without a GPU"))

    checks.append(_slack_check(
        "gpu_time", [window - float(gpu[:, j - 1].sum()) for j in sat_ids],
        [window] * len(sat_ids), "sum of slices <= alpha * frame_deadline"))

    margins = plan_margins(plan, c, app, profiles, workloads)
    checks.append(_slack_check(
        "throughput", [margins[i] for i in app.function_ids],
        [float(workloads.get(i, 0.0)) for i in app.function_ids],
        "capacity >= workload per function"))

    cpu_slack, ram_slack, vram_slack, mem_slack = [], [], [], []
    cpu_scale, ram_scale, vram_scale, mem_scale = [], [], [], []
    for j in sat_ids:
        sat = c.satellite(j)
        used_cores = ram = vram = 0.0
        for i in app.function_ids:
            profile = resolved[i]
            if plan.quota(i, j) > ACTIVE_THRESHOLD:
                used_cores += plan.quota(i, j)
                ram += float(profile.cpu_memory)
            if plan.slice(i, j) > ACTIVE_THRESHOLD:
                used_cores += profile.gpu_base_cpu_quota
                vram += float(profile.gpu_memory)
        cpu_slack.append(c.beta * sat.cpu_cores - used_cores)
        cpu_scale.append(c.beta * sat.cpu_cores)
        if sat.split_memory:
            ram_slack.append(float(sat.cpu_memory) - ram)
            ram_scale.append(float(sat.cpu_memory))
            vram_slack.append(float(sat.gpu_memory) - vram)
            vram_scale.append(float(sat.gpu_memory))
        else:
            mem_slack.append(sat.memory - ram - vram)
            mem_scale.append(sat.memory)

    checks.append(_slack_check("cpu_capacity", cpu_slack, cpu_scale,
                               "quotas plus GPU base quotas <= beta * cores"))
    checks.append(_slack_check("memory", mem_slack, mem_scale, "combined memory"))
    checks.append(_slack_check("cpu_memory", ram_slack, ram_scale, "split RAM"))
    checks.append(_slack_check("gpu_memory", vram_slack, vram_scale, "split VRAM"))

    min_quota, domain = [], []
    for i in app.function_ids:
        profile = resolved[i]
        for j in sat_ids:
            r = plan.quota(i, j)
            if r > ACTIVE_THRESHOLD:
                min_quota.append(r - profile.min_cpu_quota)
                domain.append(profile.max_cpu_quota - r)
    checks.append(_slack_check("min_quota", min_quota, [1.0] * len(min_quota),
                               "active quotas >= minimum quota"))
    checks.append(_slack_check("quota_domain", domain, [1.0] * len(domain),
                               "active quotas within the speed model domain"))

    report = VerificationReport(tuple(checks))
    for failed in report.failed():
        logger.warning("Plan check %s failed with slack %.6g", failed.name, failed.worst_slack)
    return report


def instance_capacities(plan: DeploymentPlan, app: ValidatedApplication,
                        profiles: Mapping[str, FunctionProfile],
                        frame_deadline: float) -> InstanceCapacityTable:
    """Tiles per frame of every active CPU and GPU instance."""
    resolved = resolve_profiles(app, profiles)
    if plan.num_functions != app.num_functions:
        raise DimensionMismatch(
            f"plan covers {plan.num_functions} functions, application has {app.num_functions}"
        )
    capacities: Dict[Instance, float] = {}
    for i in app.function_ids:
        profile = resolved[i]
        for j in range(1, plan.num_satellites + 1):
            r, t = plan.quota(i, j), plan.slice(i, j)
            if r > ACTIVE_THRESHOLD:
                speed = eval_speed(profile.speed_cpu, min(r, profile.max_cpu_quota))
                capacities[Instance(i, j, Device.CPU)] = speed * frame_deadline
            if t > ACTIVE_THRESHOLD:
                capacities[Instance(i, j, Device.GPU)] = t * profile.speed_gpu
    return InstanceCapacityTable(capacities)


def _baseline_margin(plan: DeploymentPlan, constellation: Constellation,
                     app: ValidatedApplication, profiles: Mapping[str, FunctionProfile],
                     workloads: Optional[Mapping[int, float]]) -> Optional[float]:
    if workloads is None:
        return None
    return min(plan_margins(plan, constellation, app, profiles, workloads).values())


def _memory_fits(constellation: Constellation, sat_id: int, profiles: Sequence[FunctionProfile],
                 gpu_profiles: Sequence[FunctionProfile]) -> bool:
    sat = constellation.satellite(sat_id)
    ram = sum(float(p.cpu_memory) for p in profiles)
    vram = sum(float(p.gpu_memory) for p in gpu_profiles)
    if sat.split_memory:
        return ram <= float(sat.cpu_memory) and vram <= float(sat.gpu_memory)
    return ram + vram <= sat.memory


@log_function_call
def baseline_compute_parallel(
    constellation: Constellation, app: ValidatedApplication,
    profiles: Mapping[str, FunctionProfile],
    workloads: Optional[Mapping[int, float]] = None,
) -> DeploymentPlan:
    """
    Place function i alone on satellite i with all of that satellite's resources.

    The CPU quota is capped at the end of the speed model's domain. When the
    satellite has a GPU, the function also gets the whole GPU window and the
    GPU base quota is taken out of its CPU budget.

    Raises:
        NotEnoughSatellites: fewer satellites than functions
    """
    c = constellation
    if c.num_satellites < app.num_functions:
        raise NotEnoughSatellites(
            f"compute parallelism needs {app.num_functions} satellites, have {c.num_satellites}"
        )
    resolved = resolve_profiles(app, profiles)
    cpu = np.zeros((app.num_functions, c.num_satellites))
    gpu = np.zeros_like(cpu)

    for i in app.function_ids:
        sat, profile = c.satellite(i), resolved[i]
        budget = c.beta * sat.cpu_cores
        use_gpu = (sat.has_gpu and profile.speed_gpu > 0
                   and profile.gpu_base_cpu_quota <= budget)
        if use_gpu:
            gpu[i - 1, i - 1] = c.alpha * c.frame_deadline
            budget -= profile.gpu_base_cpu_quota
        quota = min(budget, profile.max_cpu_quota)
        if quota >= profile.min_cpu_quota:
            cpu[i - 1, i - 1] = quota
        if not _memory_fits(c, i, [profile] if quota >= profile.min_cpu_quota else [],
                            [profile] if use_gpu else []):
            logger.info("Compute parallelism: function %d does not fit on satellite %d", i, i)
            return DeploymentPlan.empty(app.num_functions, c.num_satellites,
                                        placement="compute-parallel")

    plan = DeploymentPlan(cpu, gpu, None, SolverStatus.FEASIBLE, placement="compute-parallel")
    margin = _baseline_margin(plan, c, app, profiles, workloads)
    return DeploymentPlan(cpu, gpu, margin, SolverStatus.FEASIBLE, placement="compute-parallel")


@log_function_call
def baseline_data_parallel(
    constellation: Constellation, app: ValidatedApplication,
    profiles: Mapping[str, FunctionProfile],
    workloads: Optional[Mapping[int, float]] = None,
) -> DeploymentPlan:
    """
    Host every function on every satellite with an equal CPU share.

    GPU-capable functions split the GPU window equally on satellites with a
    GPU, as long as the extra GPU memory fits. The plan is Infeasible when
    the functions' memory exceeds any satellite's capacity or the equal
    share falls below a function's minimum quota.
    """
    c = constellation
    resolved = resolve_profiles(app, profiles)
    functions = [resolved[i] for i in app.function_ids]
    cpu = np.zeros((app.num_functions, c.num_satellites))
    gpu = np.zeros_like(cpu)
    infeasible = DeploymentPlan.empty(app.num_functions, c.num_satellites,
                                      placement="data-parallel")

    for sat in c.satellites:
        if not _memory_fits(c, sat.id, functions, []):
            logger.info("Data parallelism: functions need more memory than satellite %d has", sat.id)
            return infeasible

        gpu_users = [i for i in app.function_ids if resolved[i].speed_gpu > 0] if sat.has_gpu else []
        if gpu_users and not _memory_fits(c, sat.id, functions, [resolved[i] for i in gpu_users]):
            gpu_users = []
        budget = c.beta * sat.cpu_cores - sum(resolved[i].gpu_base_cpu_quota for i in gpu_users)
        if gpu_users and budget <= 0:
            gpu_users = []
            budget = c.beta * sat.cpu_cores

        share = budget / app.num_functions
        for i in app.function_ids:
            profile = resolved[i]
            if share < profile.min_cpu_quota:
                logger.info("Data parallelism: CPU share %.3f below minimum quota of function %d",
                            share, i)
                return infeasible
            cpu[i - 1, sat.id - 1] = min(share, profile.max_cpu_quota)
        for i in gpu_users:
            gpu[i - 1, sat.id - 1] = c.alpha * c.frame_deadline / len(gpu_users)

    plan = DeploymentPlan(cpu, gpu, None, SolverStatus.FEASIBLE, placement="data-parallel")
    margin = _baseline_margin(plan, c, app, profiles, workloads)
    return DeploymentPlan(cpu, gpu, margin, SolverStatus.FEASIBLE, placement="data-parallel")


def satellite_utilization(plan: DeploymentPlan, constellation: Constellation,
                          app: ValidatedApplication,
                          profiles: Mapping[str, FunctionProfile]) -> pd.DataFrame:
    """Per-satellite CPU, GPU and memory use of a plan."""
    _check_dimensions(plan, constellation, app)
    resolved = resolve_profiles(app, profiles)
    c = constellation
    rows = []
    for sat in c.satellites:
        cores = memory = 0.0
        for i in app.function_ids:
            if plan.quota(i, sat.id) > ACTIVE_THRESHOLD:
                cores += plan.quota(i, sat.id)
                memory += float(resolved[i].cpu_memory)
            if plan.slice(i, sat.id) > ACTIVE_THRESHOLD:
                cores += resolved[i].gpu_base_cpu_quota
                memory += float(resolved[i].gpu_memory)
        memory_available = (float(sat.cpu_memory) + float(sat.gpu_memory)
                            if sat.split_memory else sat.memory)
        rows.append({
            'satellite': sat.id,
            'cpu_used': cores,
            'cpu_available': c.beta * sat.cpu_cores,
            'gpu_seconds_used': float(plan.gpu_slice[:, sat.id - 1].sum()),
            'gpu_seconds_available': c.alpha * c.frame_deadline if sat.has_gpu else 0.0,
            'memory_used': memory,
            'memory_available': memory_available,
        })
    return pd.DataFrame(rows)


def _is_feasible(constellation: Constellation, app: ValidatedApplication,
                 profiles: Mapping[str, FunctionProfile], tiles: float,
                 solver: Optional[BranchAndBound]) -> bool:
    workloads = compute_frame_workloads(compute_flows(app), tiles)
    plan = solve_deployment(constellation, app, profiles, workloads, solver, first_feasible=True)
    return plan.is_feasible


def max_analyzable_tiles(
    constellation: Constellation, app: ValidatedApplication,
    profiles: Mapping[str, FunctionProfile], integral: bool = True,
    tolerance: float = 1e-3, solver: Optional[BranchAndBound] = None,
) -> float:
    """
    Largest tiles-per-frame count the constellation can analyse.

    Bisection over solver feasibility. The upper bracket is found by doubling.

    Args:
        constellation: Satellites and timing
        app: Validated application
        profiles: Profiles keyed by profile reference
        integral: Search whole tiles only
        tolerance: Relative bracket width at which a real-valued search stops
        solver: Branch-and-bound configuration

    Returns:
        The largest feasible tile count (0 when even one tile is infeasible)
    """
    lo, hi = 0.0, 1.0
    with LogContext("analyzable tiles search", logger, level='DEBUG'):
        while _is_feasible(constellation, app, profiles, hi, solver):
            lo, hi = hi, hi * 2
            if hi > 1e12:
                raise ValueError("analyzable tiles appear unbounded")

        if integral:
            lo_i, hi_i = int(lo), int(hi)
            while hi_i - lo_i > 1:
                mid = (lo_i + hi_i) // 2
                if _is_feasible(constellation, app, profiles, mid, solver):
                    lo_i = mid
                else:
                    hi_i = mid
            return float(lo_i)

        while hi - lo > tolerance * max(1.0, lo):
            mid = (lo + hi) / 2
            if _is_feasible(constellation, app, profiles, mid, solver):
                lo = mid
            else:
                hi = mid
        return lo


def with_frame_deadline(constellation: Constellation, frame_deadline: float) -> Constellation:
    return Constellation(constellation.satellites, frame_deadline, constellation.revisit_interval,
                         constellation.alpha, constellation.beta)


def deadline_sweep(
    constellation: Constellation, app: ValidatedApplication,
    profiles: Mapping[str, FunctionProfile], tiles_per_frame: float,
    deadlines: Sequence[float], solver: Optional[BranchAndBound] = None,
) -> pd.DataFrame:
    """Solve at every frame deadline and report feasibility and analyzable tiles."""
    workloads = compute_frame_workloads(compute_flows(app), tiles_per_frame)
    rows = []
    for deadline in deadlines:
        swept = with_frame_deadline(constellation, float(deadline))
        with LogContext(f"deadline sweep point {deadline}s", logger):
            plan = solve_deployment(swept, app, profiles, workloads, solver)
            rows.append({
                'frame_deadline': float(deadline),
                'status': plan.status.value,
                'objective_margin': plan.objective_margin,
                'max_analyzable_tiles': max_analyzable_tiles(swept, app, profiles, solver=solver),
            })
    return pd.DataFrame(rows)
