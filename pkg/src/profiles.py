"""
Performance profiles of analytics functions.

The CPU processing speed of a function is a piecewise-linear, monotonically
non-decreasing function of its CPU quota (cores). Below the minimum quota a
function cannot be instantiated and its speed is zero. GPU speed is a
constant: a function given a GPU time slice runs at full GPU speed for the
length of the slice.

Fits come in two modes. The default joint fit uses a hinge basis, so the
model is continuous at every breakpoint by construction. The table-literal
mode fits every segment independently, reproducing per-segment OLS
coefficient tables that are slightly discontinuous at breakpoints.
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import r2_score

from .errors import (
    InsufficientSamples, InvalidBreakpoints, InvalidProfile, MissingProfile,
    NonMonotoneFit, QuotaAboveDomain
)
from .logging_config import get_logger
from .models import ValidatedApplication

logger = get_logger(__name__)

CONTINUITY_TOLERANCE = 1e-6
DOMAIN_TOLERANCE = 1e-9
DEFAULT_BREAKPOINTS = (2.0,)


@dataclass(frozen=True)
class LinearSegment:
    """Line ``slope * quota + intercept`` valid on ``[quota_lo, quota_hi]``."""
    quota_lo: float
    quota_hi: float
    slope: float
    intercept: float

    def value(self, quota: float) -> float:
        return self.slope * quota + self.intercept


@dataclass(frozen=True)
class PiecewiseSpeedModel:
    """
    Piecewise-linear CPU speed model in tiles per second.

    Attributes:
        segments: Contiguous segments ordered by quota
        continuous: When True, segment values must agree at breakpoints
    """
    segments: Tuple[LinearSegment, ...]
    continuous: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, 'segments', tuple(self.segments))
        if not self.segments:
            raise InvalidProfile("speed model needs at least one segment")

        for seg in self.segments:
            if seg.quota_lo < 0 or seg.quota_hi <= seg.quota_lo:
                raise InvalidProfile(
                    f"segment [{seg.quota_lo}, {seg.quota_hi}] is not a valid quota interval"
                )
            if seg.slope < -DOMAIN_TOLERANCE:
                raise NonMonotoneFit(f"segment [{seg.quota_lo}, {seg.quota_hi}] has slope {seg.slope}")

        for left, right in zip(self.segments, self.segments[1:]):
            if abs(left.quota_hi - right.quota_lo) > DOMAIN_TOLERANCE:
                raise InvalidProfile(
                    f"segments not contiguous: {left.quota_hi} vs {right.quota_lo}"
                )
            gap = right.value(right.quota_lo) - left.value(left.quota_hi)
            if self.continuous and abs(gap) > CONTINUITY_TOLERANCE:
                raise InvalidProfile(
                    f"model discontinuous at quota {right.quota_lo} (jump {gap:.3g})"
                )
            if gap < -CONTINUITY_TOLERANCE:
                raise NonMonotoneFit(f"model drops by {-gap:.3g} at quota {right.quota_lo}")

    @property
    def lower_bound(self) -> float:
        return self.segments[0].quota_lo

    @property
    def upper_bound(self) -> float:
        return self.segments[-1].quota_hi

    @property
    def slopes(self) -> List[float]:
        return [seg.slope for seg in self.segments]


@dataclass(frozen=True)
class FunctionProfile:
    """
    Profile of one analytics function.

    Memory is charged per active instance. ``cpu_memory`` and ``gpu_memory``
    default to ``memory`` and are used for the CPU and GPU instance
    respectively.

    Attributes:
        name: Profile key
        speed_cpu: CPU speed model; its domain starts at ``min_cpu_quota``
        speed_gpu: GPU speed in tiles per second
        memory: Peak memory of an instance in bytes
        min_cpu_quota: Smallest CPU quota that can instantiate the function
        gpu_base_cpu_quota: CPU cores a GPU instance needs while running
        cpu_memory: RAM of a CPU instance in bytes
        gpu_memory: Memory of a GPU instance in bytes
    """
    name: str
    speed_cpu: PiecewiseSpeedModel
    speed_gpu: float
    memory: float
    min_cpu_quota: float
    gpu_base_cpu_quota: float = 0.0
    cpu_memory: Optional[float] = None
    gpu_memory: Optional[float] = None

    def __post_init__(self) -> None:
        if self.speed_gpu < 0:
            raise InvalidProfile(f"{self.name}: speed_gpu must be non-negative")
        if self.memory <= 0:
            raise InvalidProfile(f"{self.name}: memory must be positive")
        if self.min_cpu_quota <= 0:
            raise InvalidProfile(f"{self.name}: min_cpu_quota must be positive")
        if self.gpu_base_cpu_quota < 0:
            raise InvalidProfile(f"{self.name}: gpu_base_cpu_quota must be non-negative")
        if abs(self.speed_cpu.lower_bound - self.min_cpu_quota) > DOMAIN_TOLERANCE:
            raise InvalidProfile(
                f"{self.name}: speed model starts at {self.speed_cpu.lower_bound}, "
                f"min_cpu_quota is {self.min_cpu_quota}"
            )
        if self.cpu_memory is None:
            object.__setattr__(self, 'cpu_memory', self.memory)
        if self.gpu_memory is None:
            object.__setattr__(self, 'gpu_memory', self.memory)

    @property
    def max_cpu_quota(self) -> float:
        return self.speed_cpu.upper_bound


class PiecewiseFit(NamedTuple):
    model: PiecewiseSpeedModel
    r2: List[float]


def eval_speed(model: PiecewiseSpeedModel, quota: float) -> float:
    """
    Processing speed at ``quota`` cores.

    Quotas below the domain evaluate to 0. At a breakpoint the right-hand
    segment is used.

    Raises:
        QuotaAboveDomain: quota exceeds the model's upper bound
    """
    if quota < 0:
        raise ValueError(f"quota must be non-negative, got {quota}")
    if quota > model.upper_bound + DOMAIN_TOLERANCE:
        raise QuotaAboveDomain(f"quota {quota} above model domain end {model.upper_bound}")
    if quota < model.lower_bound - DOMAIN_TOLERANCE:
        return 0.0

    quota = min(max(quota, model.lower_bound), model.upper_bound)
    for seg in model.segments[:-1]:
        if quota < seg.quota_hi:
            return seg.value(quota)
    return model.segments[-1].value(quota)


def is_concave(model: PiecewiseSpeedModel) -> bool:
    """
    True when the model is a concave function of the quota.

    Slopes must be non-increasing from left to right and the model must not
    jump up at a breakpoint. After an upward step the minimum of the segment
    lines falls below the speed the model delivers.
    """
    slopes = model.slopes
    if any(b > a + DOMAIN_TOLERANCE for a, b in zip(slopes, slopes[1:])):
        return False
    return all(
        right.value(right.quota_lo) - left.value(left.quota_hi) <= CONTINUITY_TOLERANCE
        for left, right in zip(model.segments, model.segments[1:])
    )


def _segment_masks(quotas: np.ndarray, edges: Sequence[float]) -> List[np.ndarray]:
    # Half-open segments; the last one is closed on the right
    masks = []
    for k in range(len(edges) - 1):
        lo, hi = edges[k], edges[k + 1]
        if k == len(edges) - 2:
            masks.append((quotas >= lo) & (quotas <= hi))
        else:
            masks.append((quotas >= lo) & (quotas < hi))
    return masks


def fit_piecewise_linear(
    samples: Sequence[Tuple[float, float]],
    breakpoints: Sequence[float] = DEFAULT_BREAKPOINTS,
    continuous: bool = True,
) -> PiecewiseFit:
    """
    Fit a piecewise-linear speed model to (quota, speed) samples.

    The domain runs from the smallest to the largest sampled quota. A sample
    lying exactly on a breakpoint belongs to the segment on its right.

    Args:
        samples: Measured (quota, tiles per second) pairs
        breakpoints: Interior quotas where the slope may change
        continuous: Joint hinge fit when True, independent OLS per segment
            when False

    Returns:
        PiecewiseFit with the model and the R^2 of every segment

    Raises:
        InsufficientSamples: a segment has fewer than two distinct quotas
        InvalidBreakpoints: breakpoints not strictly increasing inside the range
        NonMonotoneFit: the fitted model decreases somewhere
    """
    data = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len(data) < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {len(data)}")

    quotas, speeds = data[:, 0], data[:, 1]
    lo, hi = float(quotas.min()), float(quotas.max())
    bps = [float(b) for b in breakpoints]
    if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
        raise InvalidBreakpoints(f"breakpoints must be strictly increasing: {bps}")
    if bps and (bps[0] <= lo or bps[-1] >= hi):
        raise InvalidBreakpoints(f"breakpoints {bps} must lie strictly inside [{lo}, {hi}]")

    edges = [lo] + bps + [hi]
    masks = _segment_masks(quotas, edges)
    for k, mask in enumerate(masks):
        if len(np.unique(quotas[mask])) < 2:
            raise InsufficientSamples(
                f"segment [{edges[k]}, {edges[k + 1]}] has fewer than 2 distinct quotas"
            )

    if continuous:
        lines = _fit_hinge(quotas, speeds, bps)
    else:
        lines = [tuple(np.polyfit(quotas[mask], speeds[mask], 1)) for mask in masks]

    segments = []
    for k, (slope, intercept) in enumerate(lines):
        if slope < -DOMAIN_TOLERANCE:
            raise NonMonotoneFit(
                f"fitted slope {slope:.4g} on [{edges[k]}, {edges[k + 1]}] is negative"
            )
        segments.append(LinearSegment(edges[k], edges[k + 1], float(slope), float(intercept)))
    model = PiecewiseSpeedModel(tuple(segments), continuous=continuous)

    r2 = []
    for seg, mask in zip(segments, masks):
        predicted = seg.slope * quotas[mask] + seg.intercept
        r2.append(float(r2_score(speeds[mask], predicted)))

    logger.debug("Fitted %d segments on %d samples, R^2=%s", len(segments), len(data), r2)
    return PiecewiseFit(model, r2)


def _fit_hinge(quotas: np.ndarray, speeds: np.ndarray,
               breakpoints: Sequence[float]) -> List[Tuple[float, float]]:
    # y = a + b*q + sum_k c_k * max(0, q - bp_k) is continuous at every bp_k
    columns = [np.ones_like(quotas), quotas]
    columns += [np.maximum(0.0, quotas - bp) for bp in breakpoints]
    design = np.column_stack(columns)
    coef, *_ = np.linalg.lstsq(design, speeds, rcond=None)

    slope, intercept = float(coef[1]), float(coef[0])
    lines = [(slope, intercept)]
    for bp, change in zip(breakpoints, coef[2:]):
        intercept -= float(change) * bp
        slope += float(change)
        lines.append((slope, intercept))
    return lines


def model_from_coefficients(
    rows: Sequence[Tuple[float, float, float, float]], continuous: bool = True
) -> PiecewiseSpeedModel:
    """Build a model from (quota_lo, quota_hi, slope, intercept) rows."""
    return PiecewiseSpeedModel(
        tuple(LinearSegment(*map(float, row)) for row in rows), continuous=continuous
    )


def resolve_profiles(
    app: ValidatedApplication, profiles: Mapping[str, FunctionProfile]
) -> Dict[int, FunctionProfile]:
    """Map each function id to its profile."""
    resolved = {}
    for function in app.functions:
        if function.profile_ref not in profiles:
            raise MissingProfile(
                f"function {function.id} ({function.name}) references unknown profile "
                f"'{function.profile_ref}'"
            )
        resolved[function.id] = profiles[function.profile_ref]
    return resolved
