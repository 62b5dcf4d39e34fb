"""
BL-8: Discrepancy detector.

Compares recomputed figures with the published ones. A figure outside its
tolerance raises a WARNING, beyond twice the tolerance a CRITICAL. Figures
marked as not asserted never go above INFO.
"""

from __future__ import annotations

from pkg.models.report import Discrepancy, FigureCheck, ReproductionRun, Severity


class DiscrepancyDetector:
    """Flags figure checks that do not reproduce within tolerance."""

    def __init__(self, critical_factor: float = 2.0) -> None:
        self.critical_factor = critical_factor

    def check(self, fig: FigureCheck) -> Discrepancy | None:
        """Discrepancy for one figure, or None when it agrees."""
        if fig.published is None or fig.agrees:
            return None
        delta = fig.computed - fig.published
        unit = f" {fig.unit}" if fig.unit else ""
        if not fig.asserted:
            severity = Severity.INFO
        elif abs(delta) > self.critical_factor * fig.tolerance:
            severity = Severity.CRITICAL
        else:
            severity = Severity.WARNING
        message = (
            f"computed {fig.computed:.6g}{unit} vs published {fig.published:.6g}{unit} "
            f"(delta {delta:+.3g}, tolerance {fig.tolerance:.3g})"
        )
        if fig.note:
            message += f"; {fig.note}"
        return Discrepancy(
            check_name=fig.name,
            area=fig.area,
            severity=severity,
            message=message,
            computed=fig.computed,
            published=fig.published,
            delta=delta,
        )

    def check_run(self, run: ReproductionRun) -> list[Discrepancy]:
        """Check every figure of a run and store the discrepancies on it."""
        found = [d for d in (self.check(fig) for fig in run.checks) if d is not None]
        run.discrepancies = found
        return found
