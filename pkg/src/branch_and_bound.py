"""
Branch-and-bound for mixed binary linear programs.

Relaxations are solved with ``scipy.optimize.linprog`` (HiGHS). Nodes are
explored best-bound first; every node also tries two cheap roundings of its
relaxation (ceil, then nearest) to find incumbents early. Problems with few
binaries fall back to exhaustive enumeration when a relaxation runs into
numerical trouble.
"""

import heapq
import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .errors import NumericFailure
from .logging_config import get_logger

logger = get_logger(__name__)

Bounds = List[Tuple[float, Optional[float]]]


class MILPStatus(Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"


@dataclass
class MixedBinaryProgram:
    """
    ``minimize c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
    and variable bounds, where variables listed in ``binaries`` take 0 or 1.
    """
    c: np.ndarray
    bounds: Bounds
    binaries: Sequence[int]
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None

    @property
    def num_binaries(self) -> int:
        return len(self.binaries)


@dataclass
class MILPResult:
    status: MILPStatus
    x: Optional[np.ndarray]
    objective: Optional[float]
    nodes_explored: int = 0
    lp_solves: int = 0
    wall_time: float = 0.0
    method: str = "branch-and-bound"


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)


class _Relaxation(Enum):
    SOLVED = 0
    INFEASIBLE = 1
    TROUBLE = 2


class BranchAndBound:
    """
    Best-first branch-and-bound over binary variables.

    Args:
        gap_tolerance: Absolute optimality gap at which nodes are pruned
        integrality_tolerance: Distance from 0/1 still counted as integral
        max_nodes: Node budget; an incumbent found by then is returned as
            Feasible
        enumeration_limit: Binary count up to which exhaustive enumeration
            replaces a failing search
    """

    def __init__(
        self,
        gap_tolerance: float = 1e-6,
        integrality_tolerance: float = 1e-6,
        max_nodes: int = 20000,
        enumeration_limit: int = 12,
    ):
        self.gap_tolerance = gap_tolerance
        self.integrality_tolerance = integrality_tolerance
        self.max_nodes = max_nodes
        self.enumeration_limit = enumeration_limit
        self._lp_solves = 0

    def _solve_lp(self, program: MixedBinaryProgram, lower: np.ndarray,
                  upper: np.ndarray) -> Tuple[_Relaxation, Optional[np.ndarray], float]:
        bounds = list(program.bounds)
        for k, idx in enumerate(program.binaries):
            bounds[idx] = (float(lower[k]), float(upper[k]))

        self._lp_solves += 1
        res = linprog(
            program.c, A_ub=program.A_ub, b_ub=program.b_ub,
            A_eq=program.A_eq, b_eq=program.b_eq, bounds=bounds, method="highs",
        )
        if res.status == 0:
            return _Relaxation.SOLVED, np.asarray(res.x), float(res.fun)
        if res.status == 2:
            return _Relaxation.INFEASIBLE, None, np.inf
        if res.status == 3:
            raise NumericFailure("LP relaxation is unbounded")
        logger.warning("LP relaxation returned status %s: %s", res.status, res.message)
        return _Relaxation.TROUBLE, None, np.inf

    def _fractional(self, program: MixedBinaryProgram, x: np.ndarray) -> Optional[int]:
        # Index (into program.binaries) of the most fractional binary
        values = x[list(program.binaries)]
        distance = np.abs(values - np.round(values))
        if distance.size == 0 or distance.max() <= self.integrality_tolerance:
            return None
        return int(np.argmax(np.minimum(values - np.floor(values), np.ceil(values) - values)))

    def _snap(self, program: MixedBinaryProgram, x: np.ndarray) -> np.ndarray:
        snapped = x.copy()
        idx = list(program.binaries)
        snapped[idx] = np.round(snapped[idx])
        return snapped

    def _roundings(self, program: MixedBinaryProgram, x: np.ndarray) -> Iterable[np.ndarray]:
        values = x[list(program.binaries)]
        yield (values > self.integrality_tolerance).astype(float)
        yield np.round(values)

    def solve(self, program: MixedBinaryProgram, first_feasible: bool = False) -> MILPResult:
        """
        Solve ``program``.

        Args:
            program: Problem to minimize
            first_feasible: Stop at the first incumbent and report Feasible

        Raises:
            NumericFailure: no trustworthy answer exists
        """
        start = time.perf_counter()
        self._lp_solves = 0
        try:
            result = self._branch_and_bound(program, first_feasible)
        except _NumericTrouble:
            if program.num_binaries > self.enumeration_limit:
                raise NumericFailure(
                    f"LP relaxation failed and {program.num_binaries} binaries exceed the "
                    f"enumeration limit of {self.enumeration_limit}"
                ) from None
            logger.warning("Falling back to enumeration over %d binaries", program.num_binaries)
            result = self.enumerate(program)
        result.lp_solves = self._lp_solves
        result.wall_time = time.perf_counter() - start
        return result

    def _branch_and_bound(self, program: MixedBinaryProgram,
                          first_feasible: bool = False) -> MILPResult:
        n = program.num_binaries
        lower = np.array([program.bounds[i][0] for i in program.binaries], dtype=float)
        upper = np.array([program.bounds[i][1] for i in program.binaries], dtype=float)

        best_x: Optional[np.ndarray] = None
        best_obj = np.inf
        tried: set = set()
        counter = itertools.count()
        nodes = 0

        status, x, obj = self._solve_lp(program, lower, upper)
        if status is _Relaxation.TROUBLE:
            raise _NumericTrouble()
        if status is _Relaxation.INFEASIBLE:
            return MILPResult(MILPStatus.INFEASIBLE, None, None, nodes_explored=1)

        heap = [_Node(obj, next(counter), lower, upper)]
        pending = {heap[0].seq: x}

        while heap:
            node = heapq.heappop(heap)
            x = pending.pop(node.seq)
            if node.bound >= best_obj - self.gap_tolerance:
                continue
            if nodes >= self.max_nodes:
                heapq.heappush(heap, node)
                break
            nodes += 1

            branch = self._fractional(program, x)
            if branch is None:
                best_x, best_obj = self._snap(program, x), node.bound
                if first_feasible:
                    break
                continue

            for pattern in self._roundings(program, x):
                pattern = np.clip(pattern, node.lower, node.upper)
                key = pattern.tobytes()
                if key in tried:
                    continue
                tried.add(key)
                h_status, hx, h_obj = self._solve_lp(program, pattern, pattern)
                if h_status is _Relaxation.SOLVED and h_obj < best_obj:
                    best_x, best_obj = self._snap(program, hx), h_obj
            if first_feasible and best_x is not None:
                heapq.heappush(heap, node)
                pending[node.seq] = x
                break

            for value in (0.0, 1.0):
                child_lower, child_upper = node.lower.copy(), node.upper.copy()
                child_lower[branch] = child_upper[branch] = value
                c_status, cx, c_obj = self._solve_lp(program, child_lower, child_upper)
                if c_status is _Relaxation.TROUBLE:
                    raise _NumericTrouble()
                if c_status is _Relaxation.INFEASIBLE or c_obj >= best_obj - self.gap_tolerance:
                    continue
                child = _Node(c_obj, next(counter), child_lower, child_upper)
                pending[child.seq] = cx
                heapq.heappush(heap, child)

        heap = [node for node in heap if node.bound < best_obj - self.gap_tolerance]
        if best_x is None:
            if heap:
                raise NumericFailure(
                    f"node limit {self.max_nodes} reached without a feasible solution"
                )
            return MILPResult(MILPStatus.INFEASIBLE, None, None, nodes_explored=nodes)

        status_out = MILPStatus.FEASIBLE if heap else MILPStatus.OPTIMAL
        logger.debug("Branch-and-bound %s after %d nodes (n_bin=%d, objective=%.6g)",
                     status_out.value, nodes, n, best_obj)
        return MILPResult(status_out, best_x, float(best_obj), nodes_explored=nodes)

    def enumerate(self, program: MixedBinaryProgram) -> MILPResult:
        """Solve one LP per binary pattern and keep the best."""
        start = time.perf_counter()
        best_x: Optional[np.ndarray] = None
        best_obj = np.inf
        patterns = 0
        fixed_lower = np.array([program.bounds[i][0] for i in program.binaries], dtype=float)
        fixed_upper = np.array([program.bounds[i][1] for i in program.binaries], dtype=float)

        for bits in itertools.product((0.0, 1.0), repeat=program.num_binaries):
            pattern = np.array(bits)
            if np.any(pattern < fixed_lower) or np.any(pattern > fixed_upper):
                continue
            patterns += 1
            status, x, obj = self._solve_lp(program, pattern, pattern)
            if status is _Relaxation.TROUBLE:
                raise NumericFailure(f"LP failed for binary pattern {bits}")
            if status is _Relaxation.SOLVED and obj < best_obj:
                best_x, best_obj = self._snap(program, x), obj

        elapsed = time.perf_counter() - start
        if best_x is None:
            return MILPResult(MILPStatus.INFEASIBLE, None, None, nodes_explored=patterns,
                              wall_time=elapsed, method="enumeration")
        return MILPResult(MILPStatus.OPTIMAL, best_x, float(best_obj), nodes_explored=patterns,
                          wall_time=elapsed, method="enumeration")


class _NumericTrouble(Exception):
    pass
