"""
Scenario and profile documents.

A scenario document is a JSON file with four sections: the application
graph, the constellation, the workload and a path to a profile document.
Profile documents hold one entry per analytics function, given either as
fitted coefficients or as raw (quota, speed) samples that are fitted on load.
Both are validated with pydantic; relative profile paths resolve against
the scenario file's directory.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ScenarioError
from .logging_config import get_logger
from .models import (
    AnalyticsFunction, ApplicationEdge, ApplicationGraph, Constellation, FlowTable, Satellite,
    ValidatedApplication, compute_flows, compute_frame_workloads, validate_application
)
from .profiles import (
    DEFAULT_BREAKPOINTS, FunctionProfile, fit_piecewise_linear, model_from_coefficients
)

logger = get_logger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / 'data'
BUNDLED_SCENARIOS = {
    'jetson3': DATA_DIR / 'scenarios' / 'jetson3.json',
    'pi4': DATA_DIR / 'scenarios' / 'pi4.json',
}
REFERENCE_PROFILES = DATA_DIR / 'profiles' / 'reference_profiles.json'
REFERENCE_SAMPLES = DATA_DIR / 'profiles' / 'reference_samples.csv'


class _Document(BaseModel):
    model_config = ConfigDict(extra='forbid')


# Profiles

class SegmentSpec(_Document):
    quota_lo: float = Field(ge=0)
    quota_hi: float = Field(gt=0)
    slope: float
    intercept: float


class ProfileEntry(_Document):
    mode: Literal['coefficients', 'samples']
    continuous: bool = True
    segments: Optional[List[SegmentSpec]] = None
    samples: Optional[List[Tuple[float, float]]] = None
    breakpoints: List[float] = Field(default_factory=lambda: list(DEFAULT_BREAKPOINTS))
    speed_gpu: float = Field(default=0.0, ge=0)
    memory: float = Field(gt=0)
    cpu_memory: Optional[float] = Field(default=None, gt=0)
    gpu_memory: Optional[float] = Field(default=None, gt=0)
    min_cpu_quota: Optional[float] = Field(default=None, gt=0)
    gpu_base_cpu_quota: float = Field(default=0.0, ge=0)

    @model_validator(mode='after')
    def _check_mode(self) -> 'ProfileEntry':
        if self.mode == 'coefficients' and not self.segments:
            raise ValueError("coefficients mode needs a non-empty 'segments' list")
        if self.mode == 'samples' and not self.samples:
            raise ValueError("samples mode needs a non-empty 'samples' list")
        return self

    def to_profile(self, name: str) -> FunctionProfile:
        if self.mode == 'coefficients':
            model = model_from_coefficients(
                [(s.quota_lo, s.quota_hi, s.slope, s.intercept) for s in self.segments or []],
                continuous=self.continuous,
            )
        else:
            model = fit_piecewise_linear(self.samples or [], self.breakpoints,
                                         continuous=self.continuous).model
        return FunctionProfile(
            name=name,
            speed_cpu=model,
            speed_gpu=self.speed_gpu,
            memory=self.memory,
            min_cpu_quota=self.min_cpu_quota if self.min_cpu_quota is not None else model.lower_bound,
            gpu_base_cpu_quota=self.gpu_base_cpu_quota,
            cpu_memory=self.cpu_memory,
            gpu_memory=self.gpu_memory,
        )


class ProfileDocument(_Document):
    profiles: Dict[str, ProfileEntry] = Field(min_length=1)


# Scenarios

class FunctionSpec(_Document):
    id: int = Field(ge=1)
    name: str
    profile: str


class EdgeSpec(_Document):
    source: int
    target: int
    ratio: float


class ApplicationSection(_Document):
    functions: List[FunctionSpec] = Field(min_length=1)
    edges: List[EdgeSpec] = Field(default_factory=list)


class SatelliteSpec(_Document):
    id: int = Field(ge=1)
    cpu_cores: float = Field(gt=0)
    memory: float = Field(gt=0)
    has_gpu: bool = False
    cpu_memory: Optional[float] = Field(default=None, gt=0)
    gpu_memory: Optional[float] = Field(default=None, gt=0)


class ConstellationSection(_Document):
    satellites: List[SatelliteSpec] = Field(min_length=1)
    frame_deadline: float = Field(gt=0)
    revisit_interval: float = Field(gt=0)
    alpha: float = Field(default=1.0, gt=0, le=1)
    beta: float = Field(default=1.0, gt=0, le=1)


class WorkloadSection(_Document):
    tiles_per_frame: float = Field(ge=0)
    num_frames: int = Field(default=96, ge=1)
    request_bytes: float = Field(default=200.0, ge=0)
    response_bytes: float = Field(default=200.0, ge=0)
    link_bandwidth: float = Field(default=50_000.0, gt=0)
    background_noise: float = Field(default=0.0, ge=0, lt=1)


class ScenarioDocument(_Document):
    name: str
    application: ApplicationSection
    constellation: ConstellationSection
    workload: WorkloadSection
    profiles: str

    @model_validator(mode='after')
    def _check_references(self) -> 'ScenarioDocument':
        ids = [f.id for f in self.application.functions]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate function ids: {ids}")
        sat_ids = [s.id for s in self.constellation.satellites]
        if len(set(sat_ids)) != len(sat_ids):
            raise ValueError(f"duplicate satellite ids: {sat_ids}")
        return self


@dataclass(frozen=True)
class Scenario:
    """A scenario document resolved into domain objects."""
    name: str
    app: ValidatedApplication
    constellation: Constellation
    workload: WorkloadSection
    profiles: Dict[str, FunctionProfile] = field(repr=False)
    source: Optional[Path] = None
    profile_source: Optional[Path] = None

    @property
    def tiles_per_frame(self) -> float:
        return self.workload.tiles_per_frame

    @property
    def flows(self) -> FlowTable:
        return compute_flows(self.app)

    def workloads(self, tiles_per_frame: Optional[float] = None) -> Dict[int, float]:
        tiles = self.tiles_per_frame if tiles_per_frame is None else tiles_per_frame
        return compute_frame_workloads(self.flows, tiles)


def _read_json(path: Path) -> object:
    try:
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path} is not valid JSON: {e}") from e


def parse_profile_document(data: object) -> Dict[str, FunctionProfile]:
    try:
        document = ProfileDocument.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"Invalid profile document: {e}") from e
    return {name: entry.to_profile(name) for name, entry in document.profiles.items()}


def load_profiles(path: Union[str, Path]) -> Dict[str, FunctionProfile]:
    """
    Load a profile document.

    Raises:
        FileNotFoundError: the file does not exist
        ScenarioError: the document is malformed
        ProfileError: a profile violates its invariants
    """
    path = Path(path)
    profiles = parse_profile_document(_read_json(path))
    logger.debug("Loaded %d profiles from %s", len(profiles), path)
    return profiles


def build_scenario(document: ScenarioDocument, profiles: Dict[str, FunctionProfile],
                   source: Optional[Path] = None,
                   profile_source: Optional[Path] = None) -> Scenario:
    app = validate_application(ApplicationGraph(
        functions=[AnalyticsFunction(f.id, f.name, f.profile) for f in document.application.functions],
        edges=[ApplicationEdge(e.source, e.target, e.ratio) for e in document.application.edges],
    ))
    section = document.constellation
    constellation = Constellation(
        satellites=tuple(
            Satellite(s.id, s.cpu_cores, s.memory, s.has_gpu, s.cpu_memory, s.gpu_memory)
            for s in sorted(section.satellites, key=lambda s: s.id)
        ),
        frame_deadline=section.frame_deadline,
        revisit_interval=section.revisit_interval,
        alpha=section.alpha,
        beta=section.beta,
    )
    return Scenario(document.name, app, constellation, document.workload, profiles,
                    source, profile_source)


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Load a scenario document together with the profiles it references.

    Args:
        path: Scenario JSON file, or the name of a bundled scenario

    Returns:
        Scenario

    Raises:
        FileNotFoundError: the scenario or profile file does not exist
        ScenarioError: a document is malformed
        ApplicationError: the application graph is invalid
    """
    path = BUNDLED_SCENARIOS.get(str(path), Path(path))
    try:
        document = ScenarioDocument.model_validate(_read_json(path))
    except ValidationError as e:
        raise ScenarioError(f"Invalid scenario document {path}: {e}") from e

    profile_path = Path(document.profiles)
    if not profile_path.is_absolute():
        profile_path = path.parent / profile_path
    profiles = load_profiles(profile_path)

    scenario = build_scenario(document, profiles, path, profile_path)
    logger.info("Loaded scenario %s: %d functions on %d satellites",
                scenario.name, scenario.app.num_functions, scenario.constellation.num_satellites)
    return scenario
