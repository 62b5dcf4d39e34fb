"""
BL-8: Reproduction run models.

A reproduction run recomputes every published figure, stores each as a
FigureCheck and raises a Discrepancy when computed and published values
disagree beyond tolerance.
"""

from __future__ import annotations

from enum import Enum
from typing import Any

from pydantic import BaseModel, Field


class RunStatus(str, Enum):
    PENDING = "pending"
    COMPLETED = "completed"
    FAILED = "failed"


class Severity(str, Enum):
    """How far a computed figure sits from the published one."""
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


class FigureCheck(BaseModel):
    """One recomputed number next to the value quoted for it."""
    name: str
    area: str  # bell, lhv, calibration, double-slit, qkd
    computed: float
    published: float | None = None  # None: nothing to compare against
    tolerance: float = 0.0  # absolute
    unit: str = ""
    note: str = ""
    asserted: bool = True  # False: reported only, never raises above INFO

    @property
    def delta(self) -> float | None:
        if self.published is None:
            return None
        return self.computed - self.published

    @property
    def agrees(self) -> bool:
        d = self.delta
        return d is None or abs(d) <= self.tolerance


class Discrepancy(BaseModel):
    """A figure that does not reproduce within tolerance."""
    check_name: str
    area: str
    severity: Severity
    message: str
    computed: float = 0.0
    published: float = 0.0
    delta: float = 0.0


class ReproductionRun(BaseModel):
    """All checks of one run plus summary counts."""
    run_id: str  # config hash, so reports are reproducible
    seed: int = 0
    status: RunStatus = RunStatus.PENDING
    checks: list[FigureCheck] = Field(default_factory=list)
    discrepancies: list[Discrepancy] = Field(default_factory=list)
    total_checks: int = 0
    agreed: int = 0
    disagreed: int = 0
    error: str | None = None
    metadata: dict[str, Any] = Field(default_factory=dict)

    def compute_summary(self) -> None:
        """Count agreeing and disagreeing checks."""
        self.total_checks = len(self.checks)
        self.agreed = len([c for c in self.checks if c.agrees])
        self.disagreed = self.total_checks - self.agreed
