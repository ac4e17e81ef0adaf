"""
Human-readable summaries of plans, routings and simulations.

Summaries are Markdown rendered from Jinja2 templates in ``templates/``.
"""

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import pandas as pd
from jinja2 import Environment, FileSystemLoader

from .logging_config import get_logger
from .planner import DeploymentPlan
from .routing import RoutingPlan

logger = get_logger(__name__)

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / 'templates'


class ReportGenerator:
    """
    Render Markdown summaries with Jinja2 templates.

    Args:
        template_dir: Directory containing the templates
    """

    def __init__(self, template_dir: Union[str, Path] = TEMPLATE_DIR):
        self.template_dir = Path(template_dir)
        self.env = Environment(
            loader=FileSystemLoader(str(self.template_dir)),
            trim_blocks=True,
            lstrip_blocks=True
        )

        self.env.filters['format_number'] = self._format_number
        self.env.filters['format_percentage'] = self._format_percentage

    def render_plan_summary(
        self,
        scenario_name: str,
        plan: DeploymentPlan,
        utilization: pd.DataFrame,
        margins: Optional[Mapping[int, float]] = None,
        sweep: Optional[pd.DataFrame] = None,
    ) -> str:
        """
        Summarize a deployment plan.

        Args:
            scenario_name: Name shown in the heading
            plan: Plan to describe
            utilization: Output of ``satellite_utilization``
            margins: Per-function capacity margins
            sweep: Output of ``deadline_sweep``

        Returns:
            Rendered Markdown
        """
        instances = [
            {'function': i + 1, 'satellite': j + 1,
             'cpu_quota': float(plan.cpu_quota[i, j]), 'gpu_slice': float(plan.gpu_slice[i, j])}
            for i in range(plan.num_functions)
            for j in range(plan.num_satellites)
            if plan.cpu_quota[i, j] > 0 or plan.gpu_slice[i, j] > 0
        ]
        template = self.env.get_template('plan_summary.md.j2')
        return template.render(
            scenario=scenario_name,
            plan=plan,
            instances=instances,
            utilization=utilization.to_dict('records'),
            margins=dict(margins or {}),
            sweep=None if sweep is None else sweep.to_dict('records'),
        )

    def render_routing_summary(self, scenario_name: str, routing: RoutingPlan,
                               hop_bytes: float) -> str:
        template = self.env.get_template('routing_summary.md.j2')
        return template.render(scenario=scenario_name, routing=routing,
                               graphs=list(zip(routing.graphs, routing.assigned_load)),
                               hop_bytes=hop_bytes)

    def render_simulation_summary(self, scenario_name: str, summary: Mapping[str, Any],
                                  latencies: pd.DataFrame) -> str:
        """Summarize a simulation from ``simulator.summarize`` output and the latency table."""
        known = latencies.dropna(subset=['end_to_end_s'])
        stats: Dict[str, Any] = {
            'frames_with_analysis': len(known),
            'mean_revisit_s': float(known['revisit_s'].mean()) if len(known) else None,
            'mean_analysis_s': float(known['analysis_s'].mean()) if len(known) else None,
            'max_end_to_end_s': float(known['end_to_end_s'].max()) if len(known) else None,
        }
        template = self.env.get_template('simulation_summary.md.j2')
        return template.render(scenario=scenario_name, summary=summary, latency=stats)

    def write(self, content: str, output_path: Union[str, Path]) -> Path:
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            f.write(content)
        logger.info("Summary written: %s", output_path)
        return output_path

    @staticmethod
    def _format_number(value: Any, decimals: int = 2) -> str:
        """Custom filter to format numbers; None renders as n/a."""
        if value is None:
            return "n/a"
        if isinstance(value, (int, float)):
            return f"{value:.{decimals}f}"
        return str(value)

    @staticmethod
    def _format_percentage(value: Any, decimals: int = 1) -> str:
        """Custom filter to format a ratio in [0, 1] as a percentage."""
        if isinstance(value, (int, float)):
            return f"{value * 100:.{decimals}f}%"
        return str(value)
