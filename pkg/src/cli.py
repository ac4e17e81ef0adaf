"""
Command-line front door.

Subcommands:
    fit         Fit piecewise-linear speed models to measured samples
    plan        Solve the deployment problem (or build a baseline placement)
    route       Split per-frame tiles over realization graphs
    simulate    Run the discrete-event simulation of a planned and routed scenario
    groundlink  Analyse a ground contact trace

Exit codes: 0 success, 1 infeasible plan or incomplete routing, 2 input
error, 3 internal error.
"""

import argparse
import json
import sys
from typing import Callable, Dict, Optional, Sequence

import pandas as pd

from . import __version__
from .artifacts import (
    fits_to_dict, input_digests, load_plan, load_routing, save_plan, save_routing, write_csv,
    write_json
)
from .branch_and_bound import BranchAndBound
from .errors import InputError, InsufficientSamples, InvalidProfile, NumericFailure
from .groundlink import (
    cdf_frame, contact_interval_cdf, downlinkable_ratio, fully_downlinkable, load_contact_trace,
    ratios_frame
)
from .logging_config import get_logger, setup_logging
from .planner import (
    DeploymentPlan, baseline_compute_parallel, baseline_data_parallel, deadline_sweep,
    instance_capacities, plan_margins, satellite_utilization, solve_deployment, verify_plan
)
from .profiles import DEFAULT_BREAKPOINTS, PiecewiseFit, fit_piecewise_linear
from .report_generator import ReportGenerator
from .routing import HEAD_SELECTIONS, greedy_route, random_route, total_hop_traffic
from .scenario import Scenario, load_scenario
from .simulator import SimScenario, metrics_frame, run, summarize
from .validation import DataValidator

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT_ERROR = 2
EXIT_INTERNAL_ERROR = 3

PLACEMENTS = ("optimized", "compute-parallel", "data-parallel")


def _scenario_digests(scenario: Scenario, **extra: Optional[str]) -> Dict[str, str]:
    return input_digests({'scenario': scenario.source, 'profiles': scenario.profile_source, **extra})


def cmd_fit(args: argparse.Namespace) -> int:
    """Fit every function's samples and write the coefficients file."""
    try:
        raw = pd.read_csv(args.samples, comment='#')
    except pd.errors.EmptyDataError:
        raise InsufficientSamples(f"{args.samples} holds no samples") from None
    quality = DataValidator().generate_data_quality_report(raw, 'profile_samples')
    if quality['validation_status'] != 'PASSED':
        raise InvalidProfile(quality['validation_errors'])
    if raw.empty:
        raise InsufficientSamples(f"{args.samples} holds no samples")
    if quality['duplicate_rows']:
        logger.warning("%s repeats %d sample rows", args.samples, quality['duplicate_rows'])

    fits: Dict[str, PiecewiseFit] = {}
    for name, group in raw.groupby('function', sort=True):
        pairs = list(zip(group['quota'].astype(float), group['speed'].astype(float)))
        fits[str(name)] = fit_piecewise_linear(pairs, args.breakpoints,
                                               continuous=not args.table_literal)

    document = fits_to_dict(fits, input_digests({'samples': args.samples}))
    document['data_quality'] = quality
    write_json(document, args.output)
    for name, fit in fits.items():
        for seg, r2 in zip(fit.model.segments, fit.r2):
            print(f"{name}\t[{seg.quota_lo:g}, {seg.quota_hi:g}]\t"
                  f"slope={seg.slope:.4f}\tintercept={seg.intercept:.4f}\tr2={r2:.4f}")
    return EXIT_OK


def _build_plan(scenario: Scenario, placement: str, solver: BranchAndBound) -> DeploymentPlan:
    workloads = scenario.workloads()
    if placement == "compute-parallel":
        return baseline_compute_parallel(scenario.constellation, scenario.app, scenario.profiles, workloads)
    if placement == "data-parallel":
        return baseline_data_parallel(scenario.constellation, scenario.app, scenario.profiles, workloads)
    return solve_deployment(scenario.constellation, scenario.app, scenario.profiles, workloads, solver)


def cmd_plan(args: argparse.Namespace) -> int:
    """Solve or build the deployment and write the plan file and summary."""
    scenario = load_scenario(args.scenario)
    solver = BranchAndBound(max_nodes=args.max_nodes)
    plan = _build_plan(scenario, args.placement, solver)

    save_plan(plan, args.output, _scenario_digests(scenario))

    sweep = None
    if args.deadline_sweep:
        sweep = deadline_sweep(scenario.constellation, scenario.app, scenario.profiles,
                               scenario.tiles_per_frame, args.deadline_sweep, solver)

    utilization = satellite_utilization(plan, scenario.constellation, scenario.app, scenario.profiles)
    margins = None
    if plan.is_feasible:
        margins = plan_margins(plan, scenario.constellation, scenario.app, scenario.profiles,
                               scenario.workloads())
        report = verify_plan(plan, scenario.constellation, scenario.app, scenario.profiles,
                             scenario.workloads())
        for check in report.failed():
            print(f"warning: plan check {check.name} failed (slack {check.worst_slack:.6g})",
                  file=sys.stderr)

    generator = ReportGenerator()
    summary = generator.render_plan_summary(scenario.name, plan, utilization, margins, sweep)
    if args.summary:
        generator.write(summary, args.summary)
    print(summary)
    return EXIT_OK if plan.is_feasible else EXIT_INFEASIBLE


def cmd_route(args: argparse.Namespace) -> int:
    """Route the scenario's tiles through the instances of a plan."""
    scenario = load_scenario(args.scenario)
    plan = load_plan(args.plan)
    if not plan.is_feasible:
        print("error: cannot route an infeasible plan", file=sys.stderr)
        return EXIT_INFEASIBLE

    capacities = instance_capacities(plan, scenario.app, scenario.profiles,
                                     scenario.constellation.frame_deadline)
    if args.strategy == "random":
        routing = random_route(capacities, scenario.constellation, scenario.app,
                               scenario.tiles_per_frame, seed=args.seed,
                               head_selection=args.head_selection)
    else:
        routing = greedy_route(capacities, scenario.constellation, scenario.app,
                               scenario.tiles_per_frame, head_selection=args.head_selection)

    save_routing(routing, args.output, _scenario_digests(scenario, plan=args.plan))
    hop_bytes = total_hop_traffic(routing, scenario.workload.request_bytes,
                                  scenario.workload.response_bytes)
    print(ReportGenerator().render_routing_summary(scenario.name, routing, hop_bytes))
    return EXIT_OK if routing.is_complete else EXIT_INFEASIBLE


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simulate a planned and routed scenario and export per-frame metrics."""
    scenario = load_scenario(args.scenario)
    plan = load_plan(args.plan)
    routing = load_routing(args.routing, scenario.app)
    workload = scenario.workload

    sim = SimScenario(
        constellation=scenario.constellation,
        app=scenario.app,
        profiles=scenario.profiles,
        deployment=plan,
        routing=routing,
        num_frames=args.frames if args.frames is not None else workload.num_frames,
        link_bandwidth=args.bandwidth if args.bandwidth is not None else workload.link_bandwidth,
        request_bytes=workload.request_bytes,
        response_bytes=workload.response_bytes,
        background_noise=args.noise if args.noise is not None else workload.background_noise,
        tiles_per_frame=scenario.tiles_per_frame,
    )
    report = run(sim)
    digests = _scenario_digests(scenario, plan=args.plan, routing=args.routing)
    latencies = metrics_frame(report)
    DataValidator().validate_frame_latencies(latencies)
    write_csv(latencies, args.output, digests)

    summary = summarize(report)
    if args.summary_json:
        write_json({'kind': 'simulation-summary', **summary,
                    'provenance': {'version': __version__, 'inputs': digests}}, args.summary_json)
    print(ReportGenerator().render_simulation_summary(scenario.name, summary, latencies))
    return EXIT_OK


def cmd_groundlink(args: argparse.Namespace) -> int:
    """Contact-interval CDF and per-contact downlinkable ratios of a trace."""
    trace = load_contact_trace(args.trace)
    digests = input_digests({'trace': args.trace})
    cdf = contact_interval_cdf(trace)
    ratios = downlinkable_ratio(trace, args.gen_rate, args.filter)
    write_csv(cdf_frame(cdf), args.cdf_output, digests)
    write_csv(ratios_frame(ratios), args.ratio_output, digests)

    values = [r.ratio for r in ratios]
    print(json.dumps({
        'contacts': len(trace.contacts),
        'intervals': len(values),
        'mean_ratio': sum(values) / len(values),
        'min_ratio': min(values),
        'fully_downlinkable': fully_downlinkable(ratios),
    }, indent=2))
    return EXIT_OK


def _positive_float(value: str) -> float:
    number = float(value)
    if number <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return number


def _fraction(value: str) -> float:
    number = float(value)
    if not 0 <= number <= 1:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--log-level', default=None,
                        help="Logging level (default: $LOG_LEVEL or WARNING)")
    common.add_argument('--log-dir', default=None, help="Directory for rotating log files")

    parser = argparse.ArgumentParser(
        prog='orbital-analytics',
        description="Plan, route and simulate analytics applications on satellite constellations.",
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    fit = sub.add_parser('fit', parents=[common], help="Fit speed models to samples")
    fit.add_argument('samples', help="CSV with function, quota and speed columns")
    fit.add_argument('--breakpoints', type=float, nargs='*', default=list(DEFAULT_BREAKPOINTS))
    fit.add_argument('--table-literal', action='store_true',
                     help="Fit every segment independently instead of a continuous model")
    fit.add_argument('--output', default='profile_fit.json')
    fit.set_defaults(handler=cmd_fit)

    plan = sub.add_parser('plan', parents=[common], help="Solve the deployment problem")
    plan.add_argument('scenario', help="Scenario JSON file or bundled scenario name")
    plan.add_argument('--placement', choices=PLACEMENTS, default='optimized')
    plan.add_argument('--output', default='plan.json')
    plan.add_argument('--summary', default=None, help="Also write the Markdown summary here")
    plan.add_argument('--deadline-sweep', type=_positive_float, nargs='+', default=None,
                      metavar='SECONDS')
    plan.add_argument('--max-nodes', type=int, default=20000)
    plan.set_defaults(handler=cmd_plan)

    route = sub.add_parser('route', parents=[common], help="Route tiles through a plan")
    route.add_argument('scenario')
    route.add_argument('plan')
    route.add_argument('--strategy', choices=('greedy', 'random'), default='greedy')
    route.add_argument('--seed', type=int, default=0)
    route.add_argument('--head-selection', choices=HEAD_SELECTIONS, default='capacity')
    route.add_argument('--output', default='routing.json')
    route.set_defaults(handler=cmd_route)

    simulate = sub.add_parser('simulate', parents=[common], help="Simulate a routed plan")
    simulate.add_argument('scenario')
    simulate.add_argument('plan')
    simulate.add_argument('routing')
    simulate.add_argument('--frames', type=int, default=None)
    simulate.add_argument('--bandwidth', type=_positive_float, default=None, help="Bits per second")
    simulate.add_argument('--noise', type=float, default=None,
                          help="Fraction of CPU speed lost to background load")
    simulate.add_argument('--output', default='metrics.csv')
    simulate.add_argument('--summary-json', default=None)
    simulate.set_defaults(handler=cmd_simulate)

    ground = sub.add_parser('groundlink', parents=[common], help="Analyse a contact trace")
    ground.add_argument('trace', help="CSV with sat_id, start_s, end_s, rate_bps columns")
    ground.add_argument('--gen-rate', type=_positive_float, required=True, help="Bytes per second")
    ground.add_argument('--filter', type=_fraction, default=0.0,
                        help="Fraction of data filtered out onboard")
    ground.add_argument('--cdf-output', default='contact_cdf.csv')
    ground.add_argument('--ratio-output', default='downlink_ratios.csv')
    ground.set_defaults(handler=cmd_groundlink)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        setup_logging(args.log_level, args.log_dir)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except (InputError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NumericFailure as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    except Exception as e:
        logger.exception("Unexpected failure in %s", args.command)
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == '__main__':
    sys.exit(main())
