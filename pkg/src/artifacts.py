"""
Plan, routing and metric files.

Plans and routings are JSON documents; per-frame metrics, CDF points and
contact ratios are CSV files. Every output records the sha256 digest of the
inputs it was derived from: JSON documents in a ``provenance`` block, CSV
files in leading ``#`` comment lines.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import pandas as pd

from . import __version__
from .errors import ArtifactError
from .logging_config import get_logger
from .models import ValidatedApplication, compute_flows
from .planner import DeploymentPlan, Device, Instance, InstanceCapacityTable, SolverStats, SolverStatus
from .profiles import PiecewiseFit
from .routing import RealizationGraph, RoutingPlan, RoutingStatus

logger = get_logger(__name__)

TOOL_NAME = 'orbital-analytics'
PathLike = Union[str, Path]


def file_digest(path: PathLike) -> str:
    sha = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b''):
            sha.update(chunk)
    return sha.hexdigest()


def input_digests(inputs: Mapping[str, Optional[PathLike]]) -> Dict[str, str]:
    """Digest of every named input file that exists."""
    return {name: file_digest(path) for name, path in sorted(inputs.items())
            if path is not None and Path(path).is_file()}


def combined_digest(digests: Mapping[str, str]) -> str:
    sha = hashlib.sha256()
    for name, digest in sorted(digests.items()):
        sha.update(f"{name}:{digest}\n".encode('utf-8'))
    return sha.hexdigest()


def provenance(digests: Mapping[str, str]) -> Dict[str, Any]:
    return {'tool': TOOL_NAME, 'version': __version__, 'inputs': dict(sorted(digests.items()))}


def write_json(data: Mapping[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=False)
        f.write('\n')
    return path


def _read_document(path: PathLike, kind: str) -> Dict[str, Any]:
    try:
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ArtifactError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict) or data.get('kind') != kind:
        raise ArtifactError(f"{path} is not a {kind} file")
    return data


def write_csv(df: pd.DataFrame, path: PathLike, digests: Mapping[str, str]) -> Path:
    """Write ``df`` after comment lines naming the input digests."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"# inputs sha256={combined_digest(digests)}\n")
        for name, digest in sorted(digests.items()):
            f.write(f"# {name} sha256={digest}\n")
        df.to_csv(f, index=False)
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, comment='#')


# Deployment plans

def plan_to_dict(plan: DeploymentPlan, digests: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    return {
        'kind': 'deployment-plan',
        'placement': plan.placement,
        'status': plan.status.value,
        'objective_margin': plan.objective_margin,
        'cpu_quota': plan.cpu_quota.tolist(),
        'gpu_slice': plan.gpu_slice.tolist(),
        'stats': {
            'nodes_explored': plan.stats.nodes_explored,
            'lp_solves': plan.stats.lp_solves,
            'wall_time': plan.stats.wall_time,
            'method': plan.stats.method,
        },
        'provenance': provenance(digests or {}),
    }


def plan_from_dict(data: Mapping[str, Any]) -> DeploymentPlan:
    try:
        stats = SolverStats(**data.get('stats', {}))
        margin = data.get('objective_margin')
        return DeploymentPlan(
            cpu_quota=np.array(data['cpu_quota'], dtype=float),
            gpu_slice=np.array(data['gpu_slice'], dtype=float),
            objective_margin=None if margin is None else float(margin),
            status=SolverStatus(data['status']),
            stats=stats,
            placement=data.get('placement', 'optimized'),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"Malformed deployment plan: {e}") from e


def save_plan(plan: DeploymentPlan, path: PathLike,
              digests: Optional[Mapping[str, str]] = None) -> Path:
    written = write_json(plan_to_dict(plan, digests), path)
    logger.info("Wrote %s plan to %s", plan.status.value, written)
    return written


def load_plan(path: PathLike) -> DeploymentPlan:
    """
    Read a deployment plan file.

    Raises:
        FileNotFoundError: the file does not exist
        ArtifactError: the file is not a valid plan
    """
    return plan_from_dict(_read_document(path, 'deployment-plan'))


# Routing plans

def _instance_to_dict(instance: Instance) -> Dict[str, Any]:
    return {'function': instance.function, 'satellite': instance.satellite,
            'device': instance.device.value}


def _instance_from_dict(data: Mapping[str, Any]) -> Instance:
    return Instance(int(data['function']), int(data['satellite']), Device(data['device']))


def routing_to_dict(plan: RoutingPlan, digests: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    return {
        'kind': 'routing-plan',
        'strategy': plan.strategy,
        'status': plan.status.value,
        'tiles_per_frame': plan.tiles_per_frame,
        'total_assigned': plan.total_assigned,
        'hop_tiles': plan.hop_tiles(),
        'graphs': [
            {
                'k': graph.k,
                'capacity': graph.capacity,
                'load': load,
                'vertices': [_instance_to_dict(v) for v in graph.vertices],
            }
            for graph, load in zip(plan.graphs, plan.assigned_load)
        ],
        'residual_capacities': [
            {**_instance_to_dict(inst), 'capacity': cap}
            for inst, cap in plan.residual_capacities.items()
        ],
        'provenance': provenance(digests or {}),
    }


def routing_from_dict(data: Mapping[str, Any], app: ValidatedApplication) -> RoutingPlan:
    flows = compute_flows(app)
    try:
        graphs, loads = [], []
        for entry in data['graphs']:
            vertices = tuple(sorted((_instance_from_dict(v) for v in entry['vertices']),
                                    key=lambda inst: inst.function))
            if [v.function for v in vertices] != list(app.function_ids):
                raise ArtifactError(f"graph {entry['k']} does not hold one instance per function")
            links = tuple((vertices[e.source - 1], vertices[e.target - 1]) for e in app.edges)
            graphs.append(RealizationGraph(int(entry['k']), vertices, links,
                                           float(entry['capacity']), flows))
            loads.append(float(entry['load']))
        residual = InstanceCapacityTable({
            _instance_from_dict(r): float(r['capacity']) for r in data.get('residual_capacities', [])
        })
        return RoutingPlan(tuple(graphs), tuple(loads), residual, RoutingStatus(data['status']),
                           float(data['tiles_per_frame']), data.get('strategy', 'greedy'))
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"Malformed routing plan: {e}") from e


def save_routing(plan: RoutingPlan, path: PathLike,
                 digests: Optional[Mapping[str, str]] = None) -> Path:
    return write_json(routing_to_dict(plan, digests), path)


def load_routing(path: PathLike, app: ValidatedApplication) -> RoutingPlan:
    """
    Read a routing file for ``app``.

    Raises:
        FileNotFoundError: the file does not exist
        ArtifactError: the file is not a valid routing plan for the application
    """
    return routing_from_dict(_read_document(path, 'routing-plan'), app)


# Profile fits

def fits_to_dict(fits: Mapping[str, PiecewiseFit],
                 digests: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    return {
        'kind': 'profile-fit',
        'functions': {
            name: {
                'continuous': fit.model.continuous,
                'segments': [
                    {'quota_lo': s.quota_lo, 'quota_hi': s.quota_hi,
                     'slope': s.slope, 'intercept': s.intercept}
                    for s in fit.model.segments
                ],
                'r2': fit.r2,
            }
            for name, fit in sorted(fits.items())
        },
        'provenance': provenance(digests or {}),
    }
