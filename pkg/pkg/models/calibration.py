"""
BL-4: Detector calibration models.

Scenario and result records for absolute efficiency calibration with
down-converted pairs: arm 2 triggers, arm 1 is the detector under test.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class CalibrationScenario(BaseModel):
    """One simulated calibration acquisition."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    pair_rate: float = Field(default=1e5, ge=0.0)  # pairs/s
    eta1: float = Field(default=0.51, ge=0.0, le=1.0)
    eta2: float = Field(default=0.30, ge=0.0, le=1.0)
    dark1: float = Field(default=0.0, ge=0.0)  # counts/s
    dark2: float = Field(default=0.0, ge=0.0)  # counts/s
    coincidence_window: float = Field(default=1e-8, gt=0.0)  # s
    acquisition: float = Field(default=100.0, ge=0.0)  # s
    dead_time: float = Field(default=0.0, ge=0.0)  # s, non-paralyzable
    seed: int = 0

    @property
    def window_occupancy(self) -> float:
        """Expected pairs per coincidence window; the accidental model wants this << 1."""
        return self.pair_rate * self.coincidence_window

    def swapped(self) -> "CalibrationScenario":
        """Same acquisition with the arm labels exchanged."""
        return self.model_copy(update={
            "eta1": self.eta2, "eta2": self.eta1, "dark1": self.dark2, "dark2": self.dark1,
        })

    def with_seed(self, seed: int) -> "CalibrationScenario":
        return self.model_copy(update={"seed": seed})


class CalibrationCounts(BaseModel):
    """Raw registers of one acquisition."""
    model_config = ConfigDict(frozen=True)

    n1: int
    n2: int
    nc: int
    accidentals: float  # estimated accidental coincidences
    dark2_expected: float  # expected trigger dark counts subtracted from n2


class CalibrationResult(BaseModel):
    """Estimate of eta1 = (Nc - accidentals) / (N2 - darks)."""
    model_config = ConfigDict(frozen=True)

    eta1_hat: float
    stderr: float
    raw: CalibrationCounts
    scenario: CalibrationScenario

    def within(self, k: float = 2.0) -> bool:
        """True when the interval eta1_hat +/- k stderr covers the true eta1."""
        return abs(self.eta1_hat - self.scenario.eta1) <= k * self.stderr


class BiasRow(BaseModel):
    """Seed-averaged summary of one scenario cell."""
    scenario: CalibrationScenario
    n_seeds: int
    n_failed: int = 0
    mean_estimate: float | None = None
    bias: float | None = None
    stderr: float | None = None  # standard error of the mean estimate
    mean_reported_stderr: float | None = None
    coverage_2sigma: float | None = None
    flagged: bool = False
    note: str = ""
