"""
BL-2: Clauser-Horne and detection-loophole models.

A configuration is the four analyzer angles of the CH sum plus the quality of
the polarizer and the overall detection efficiency on each arm. Results are
normalized per emitted pair.
"""

from __future__ import annotations

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pkg.models.optics import AnalyzerSetting, ArmEfficiency, Transmittance

# contour lines drawn on the loophole map
DEFAULT_CONTOUR_LEVELS: tuple[float, ...] = (0.0, 0.01, 0.1, 0.15, 0.2)


class ChForm(str, Enum):
    """Which singles enter the last two CH terms."""
    SUBSTITUTED = "substituted"  # coincidences with one analyzer removed
    STRICT = "strict"  # true singles, single-arm efficiency


class ChConfiguration(BaseModel):
    """Angles (degrees from vertical) and per-arm apparatus of one CH test."""
    model_config = ConfigDict(frozen=True)

    theta1: float = 67.5
    theta2: float = 45.0
    theta1p: float = 22.5
    theta2p: float = 0.0
    analyzer1: Transmittance = Field(default_factory=Transmittance)
    analyzer2: Transmittance = Field(default_factory=Transmittance)
    eta1: float = Field(default=1.0, ge=0.0, le=1.0)
    eta2: float = Field(default=1.0, ge=0.0, le=1.0)

    @field_validator("theta1", "theta2", "theta1p", "theta2p")
    @classmethod
    def _reduce(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("analyzer angles must be finite")
        return float(v) % 180.0

    @property
    def angles(self) -> tuple[float, float, float, float]:
        """(theta1, theta2, theta1p, theta2p)."""
        return (self.theta1, self.theta2, self.theta1p, self.theta2p)

    def with_angles(self, angles: tuple[float, float, float, float]) -> "ChConfiguration":
        t1, t2, t1p, t2p = angles
        return self.model_copy(update={
            "theta1": float(t1) % 180.0,
            "theta2": float(t2) % 180.0,
            "theta1p": float(t1p) % 180.0,
            "theta2p": float(t2p) % 180.0,
        })

    def with_efficiency(
        self,
        eta1: float | ArmEfficiency,
        eta2: float | ArmEfficiency | None = None,
    ) -> "ChConfiguration":
        eta2 = eta1 if eta2 is None else eta2
        eta1, eta2 = (e.eta if isinstance(e, ArmEfficiency) else e for e in (eta1, eta2))
        return ChConfiguration(**{**self.model_dump(), "eta1": eta1, "eta2": eta2})

    @property
    def efficiencies(self) -> tuple[ArmEfficiency, ArmEfficiency]:
        return ArmEfficiency(eta=self.eta1), ArmEfficiency(eta=self.eta2)

    def arm1(self, primed: bool = False) -> AnalyzerSetting:
        return self.analyzer1.at(self.theta1p if primed else self.theta1)

    def arm2(self, primed: bool = False) -> AnalyzerSetting:
        return self.analyzer2.at(self.theta2p if primed else self.theta2)

    @property
    def ideal_polarizers(self) -> bool:
        return self.analyzer1.is_ideal and self.analyzer2.is_ideal


# Signs of N(t1,t2), N(t1,t2'), N(t1',t2), N(t1',t2'), N(t1',inf), N(inf,t2)
CH_SIGNS: tuple[int, ...] = (1, -1, 1, 1, -1, -1)


class ChResult(BaseModel):
    """Value of the CH sum and its six addends (all nonnegative)."""
    model_config = ConfigDict(frozen=True)

    value: float
    terms: tuple[float, float, float, float, float, float]
    form: ChForm

    @model_validator(mode="after")
    def _signed_sum(self) -> "ChResult":
        total = math.fsum(s * t for s, t in zip(CH_SIGNS, self.terms))
        if not math.isclose(total, self.value, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(f"CH value {self.value} is not the signed sum of its terms ({total})")
        return self

    @classmethod
    def from_terms(cls, terms: tuple[float, ...], form: ChForm) -> "ChResult":
        terms = tuple(float(t) for t in terms)
        value = math.fsum(s * t for s, t in zip(CH_SIGNS, terms))
        return cls(value=value, terms=terms, form=form)

    @property
    def violates(self) -> bool:
        return self.value > 0.0


class OptimizerSettings(BaseModel):
    """Grid and refinement tolerances for the angle search."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid_step: float = Field(default=1.0, gt=0.0, le=15.0)  # degrees
    angle_tol: float = Field(default=1e-3, gt=0.0)  # degrees, golden-section bracket
    value_tol: float = Field(default=1e-12, gt=0.0)  # stop sweeping below this gain
    max_sweeps: int = Field(default=200, ge=1)
    scan_step: float = Field(default=1.0, gt=0.0)  # degrees, per-coordinate scan before refining

    @field_validator("grid_step")
    @classmethod
    def _divides_circle(cls, v: float) -> float:
        n = 180.0 / v
        if abs(n - round(n)) > 1e-9:
            raise ValueError("grid_step must divide 180 degrees")
        return v


class OptimizationResult(BaseModel):
    """Best configuration found and its CH value."""
    model_config = ConfigDict(frozen=True)

    configuration: ChConfiguration
    result: ChResult
    grid_value: float  # best value on the exhaustive grid
    sweeps: int = 0

    @property
    def angles(self) -> tuple[float, float, float, float]:
        return self.configuration.angles


class LoopholeMap(BaseModel):
    """Maximized strict CH per pair on an (f, eta) grid.

    Rows follow f_axis, columns follow eta_axis.
    """
    model_config = ConfigDict(frozen=True)

    f_axis: list[float]
    eta_axis: list[float]
    ch_over_n: list[list[float]]
    contour_levels: list[float] = Field(default_factory=lambda: list(DEFAULT_CONTOUR_LEVELS))

    @model_validator(mode="after")
    def _shape(self) -> "LoopholeMap":
        if len(self.ch_over_n) != len(self.f_axis):
            raise ValueError("map has one row per f value")
        for row in self.ch_over_n:
            if len(row) != len(self.eta_axis):
                raise ValueError("map has one column per eta value")
            if not all(math.isfinite(v) for v in row):
                raise ValueError("map entries must be finite")
        return self

    def value(self, f: float, eta: float) -> float:
        return self.ch_over_n[self.f_axis.index(f)][self.eta_axis.index(eta)]

    def violation(self) -> list[list[float]]:
        """max(CH/N, 0) per cell; zero marks the no-test region."""
        return [[max(v, 0.0) for v in row] for row in self.ch_over_n]

    def zero_contour(self) -> list[float | None]:
        """Smallest eta with a violation for each f row, linearly interpolated.

        None when the row never violates on the grid.
        """
        crossings: list[float | None] = []
        for row in self.ch_over_n:
            crossing = None
            for j, v in enumerate(row):
                if v > 0.0:
                    if j == 0:
                        crossing = self.eta_axis[0]
                    else:
                        lo, hi = row[j - 1], v
                        e0, e1 = self.eta_axis[j - 1], self.eta_axis[j]
                        crossing = e0 + (e1 - e0) * (-lo) / (hi - lo)
                    break
            crossings.append(crossing)
        return crossings


class RateModel(BaseModel):
    """Source brightness and background for count-rate predictions."""
    model_config = ConfigDict(frozen=True)

    pair_rate: float = Field(default=0.0, ge=0.0)  # pairs/s
    background_rate: float = Field(default=0.0, ge=0.0)  # accidental coincidences/s per term
    acquisition: float = Field(default=1.0, ge=0.0)  # s


class ChCountResult(BaseModel):
    """Expected CH in coincidences per second with a Poisson standard error."""
    model_config = ConfigDict(frozen=True)

    value: float  # 1/s
    stderr: float  # 1/s
    term_rates: tuple[float, float, float, float, float, float]  # 1/s, background included
    acquisition: float  # s
    significance: float | None = None  # value / stderr

    @property
    def significance_defined(self) -> bool:
        return self.significance is not None
