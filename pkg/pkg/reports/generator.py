"""
BL-8: Report generator.

Writes a reproduction run as JSON and as a Markdown digest rendered from a
jinja2 template. File names derive from the run id (the configuration hash),
so rerunning the same configuration overwrites the same files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from jinja2 import Environment, PackageLoader, StrictUndefined

from pkg import __version__
from pkg.models.report import ReproductionRun, Severity

_SEVERITY_MARK = {Severity.CRITICAL: "🔴", Severity.WARNING: "🟡", Severity.INFO: "🔵"}


def _num(value: float | None, digits: int = 6) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}g}"


def _environment() -> Environment:
    env = Environment(
        loader=PackageLoader("pkg.reports", "templates"),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    env.filters["num"] = _num
    env.filters["mark"] = lambda s: _SEVERITY_MARK.get(s, "⚪")
    return env


class ReportGenerator:
    """Generates reproduction reports in multiple formats."""

    def __init__(self, output_dir: str | Path = "reports") -> None:
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._env = _environment()

    def _path(self, run: ReproductionRun, suffix: str) -> Path:
        return self.output_dir / f"reproduction-{run.run_id[:8]}.{suffix}"

    def generate_json(self, run: ReproductionRun) -> str:
        """Write the run to a JSON file. Returns the file path."""
        path = self._path(run, "json")
        path.write_text(json.dumps(run.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        return str(path)

    def render_markdown(self, run: ReproductionRun) -> str:
        areas: dict[str, list] = {}
        for fig in run.checks:
            areas.setdefault(fig.area, []).append(fig)
        return self._env.get_template("report.md.j2").render(
            run=run,
            areas=areas,
            summary=self.generate_summary_dict(run),
            version=__version__,
        )

    def generate_markdown(self, run: ReproductionRun) -> str:
        """Write the Markdown digest. Returns the file path."""
        path = self._path(run, "md")
        path.write_text(self.render_markdown(run))
        return str(path)

    def generate_summary_dict(self, run: ReproductionRun) -> dict[str, Any]:
        """Return a summary dict (useful for programmatic consumption)."""
        critical = [d for d in run.discrepancies if d.severity == Severity.CRITICAL]
        warning = [d for d in run.discrepancies if d.severity == Severity.WARNING]
        info = [d for d in run.discrepancies if d.severity == Severity.INFO]
        return {
            "run_id": run.run_id,
            "status": run.status.value,
            "seed": run.seed,
            "total_checks": run.total_checks,
            "agreed": run.agreed,
            "disagreed": run.disagreed,
            "critical": len(critical),
            "warning": len(warning),
            "info": len(info),
            "agreement_rate": round(run.agreed / max(run.total_checks, 1), 2),
        }
