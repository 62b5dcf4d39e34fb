"""
BL-7: Experiment configuration.

One JSON document drives every CLI command. Units: meters, seconds, degrees
for analyzer angles, radians for interferometer phases. Unknown keys are
rejected in every section.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from pkg.errors import ConfigError
from pkg.models.bell import DEFAULT_CONTOUR_LEVELS, OptimizerSettings
from pkg.models.calibration import CalibrationScenario
from pkg.models.lhv import DEFAULT_T_LIMIT, DEFAULT_VISIBILITY_THRESHOLD, CasadoParameters
from pkg.models.optics import FringeMode, Transmittance
from pkg.models.qkd import EveStrategy, InformationMetric, ObserverPolicy
from pkg.models.slits import DetectorPlane, SlitGeometry


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SourceConfig(_Section):
    """Down-conversion source."""
    f: float = 1.0  # real part of the entanglement parameter
    f_imag: float = 0.0
    pair_rate: float = Field(default=1e5, ge=0.0)  # pairs/s
    background_rate: float = Field(default=0.0, ge=0.0)  # accidental coincidences/s
    acquisition: float = Field(default=1.0, ge=0.0)  # s

    @property
    def f_complex(self) -> complex:
        return complex(self.f, self.f_imag)


class AnalyzerConfig(_Section):
    """CH angles (degrees from vertical) and polarizer quality per arm."""
    theta1: float = 67.5
    theta2: float = 45.0
    theta1p: float = 22.5
    theta2p: float = 0.0
    arm1: Transmittance = Field(default_factory=Transmittance)
    arm2: Transmittance = Field(default_factory=Transmittance)
    fixed_theta: float = 45.0  # fringe scans: fixed arm-1 analyzer
    scan_steps: int = Field(default=720, ge=4)  # points per 180 degrees
    fringe_mode: FringeMode = FringeMode.CONDITIONAL


class EfficiencyConfig(_Section):
    eta1: float = Field(default=1.0, ge=0.0, le=1.0)
    eta2: float = Field(default=1.0, ge=0.0, le=1.0)


class CasadoConfig(_Section):
    """Rate-bound inputs and the verdict thresholds."""
    parameters: CasadoParameters = Field(default_factory=lambda: CasadoParameters(R_S=1e5))
    T_limit: float = Field(default=DEFAULT_T_LIMIT, gt=0.0)  # s
    visibility_threshold: float = Field(default=DEFAULT_VISIBILITY_THRESHOLD, ge=0.0, le=1.0)
    observed_visibility: float = Field(default=0.98, ge=0.0, le=1.0)
    ch_positive: bool = True


class CalibrationConfig(_Section):
    """Scenario, seed count and an optional cartesian scan over scenario fields."""
    scenario: CalibrationScenario = Field(default_factory=lambda: CalibrationScenario(dark2=50.0))
    n_seeds: int = Field(default=100, ge=1)
    grid: dict[str, list[float]] = Field(default_factory=dict)

    @field_validator("grid")
    @classmethod
    def _known_fields(cls, v: dict[str, list[float]]) -> dict[str, list[float]]:
        allowed = set(CalibrationScenario.model_fields) - {"seed"}
        unknown = set(v) - allowed
        if unknown:
            raise ValueError(f"unknown calibration grid fields: {sorted(unknown)}")
        for name, values in v.items():
            if not values:
                raise ValueError(f"calibration grid field {name!r} has no values")
        return v

    def scenarios(self) -> list[CalibrationScenario]:
        """Cartesian product of the grid applied to the base scenario."""
        if not self.grid:
            return [self.scenario]
        names = sorted(self.grid)
        base = self.scenario.model_dump()
        return [
            CalibrationScenario(**{**base, **dict(zip(names, combo))})
            for combo in itertools.product(*(self.grid[n] for n in names))
        ]


class DoubleSlitConfig(_Section):
    """Geometry, detector planes and the evaluation windows."""
    geometry: SlitGeometry = Field(default_factory=SlitGeometry)
    plane1: DetectorPlane = Field(default_factory=lambda: DetectorPlane(distance=1.21, aperture=2e-3))
    plane2: DetectorPlane = Field(default_factory=lambda: DetectorPlane(distance=1.5, aperture=6e-3))
    x1_range: tuple[float, float] = (-0.03, 0.03)  # m
    x2_range: tuple[float, float] = (-0.03, 0.03)  # m
    grid_points: int = Field(default=241, ge=8)
    fixed_x2: float = -0.01  # m, partner position of the fringe scan
    query: tuple[float, float] = (-0.017, -0.055)  # m, same-semiplane check
    scan_half_width: float = Field(default=6e-3, gt=0.0)  # m, singles ratio region
    synthetic_points: int = Field(default=7, ge=3)
    synthetic_peak_counts: float = Field(default=100.0, gt=0.0)
    synthetic_background: float = Field(default=0.0, ge=0.0)
    n_seeds: int = Field(default=100, ge=1)


class QkdConfig(_Section):
    """Protocol run settings."""
    phi: float = 0.0  # rad
    f_pol: float = 1.0
    rounds: int = Field(default=200_000, ge=1)
    eve: EveStrategy = Field(default_factory=EveStrategy)
    alice: ObserverPolicy = Field(default_factory=ObserverPolicy)
    bob: ObserverPolicy = Field(default_factory=ObserverPolicy)
    eve_sweep: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0])
    metric: InformationMetric = InformationMetric.FULL_SYMBOL
    target_information: float = Field(default=0.1, gt=0.0)
    transcript: bool = False

    @field_validator("eve_sweep")
    @classmethod
    def _fractions(cls, v: list[float]) -> list[float]:
        if not v or any(not 0.0 <= x <= 1.0 for x in v):
            raise ValueError("eve_sweep needs intercept fractions in [0, 1]")
        return v


class LoopholeConfig(_Section):
    """Grid of the (f, eta) map."""
    f_min: float = Field(default=0.02, gt=0.0, le=1.0)
    f_max: float = Field(default=1.0, gt=0.0, le=1.0)
    f_points: int = Field(default=50, ge=1)
    eta_min: float = Field(default=0.5, ge=0.0, le=1.0)
    eta_max: float = Field(default=1.0, ge=0.0, le=1.0)
    eta_points: int = Field(default=50, ge=1)
    grid_step: float = Field(default=2.0, gt=0.0)  # degrees, angle grid per cell
    contour_levels: list[float] = Field(default_factory=lambda: list(DEFAULT_CONTOUR_LEVELS))
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _increasing(self) -> "LoopholeConfig":
        if self.f_points > 1 and self.f_max <= self.f_min:
            raise ValueError("f grid must be strictly increasing")
        if self.eta_points > 1 and self.eta_max <= self.eta_min:
            raise ValueError("eta grid must be strictly increasing")
        return self

    def f_axis(self) -> list[float]:
        return _linspace(self.f_min, self.f_max, self.f_points)

    def eta_axis(self) -> list[float]:
        return _linspace(self.eta_min, self.eta_max, self.eta_points)


def _linspace(lo: float, hi: float, n: int) -> list[float]:
    if n == 1:
        return [hi]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n - 1)] + [hi]


class ExperimentConfig(_Section):
    """Root of the configuration file."""
    source: SourceConfig = Field(default_factory=SourceConfig)
    analyzers: AnalyzerConfig = Field(default_factory=AnalyzerConfig)
    efficiencies: EfficiencyConfig = Field(default_factory=EfficiencyConfig)
    casado: CasadoConfig = Field(default_factory=CasadoConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    double_slit: DoubleSlitConfig = Field(default_factory=DoubleSlitConfig)
    qkd: QkdConfig = Field(default_factory=QkdConfig)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    loophole: LoopholeConfig = Field(default_factory=LoopholeConfig)
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path | None) -> "ExperimentConfig":
        """Load a JSON config; None means all defaults."""
        if path is None:
            return cls()
        p = Path(path)
        try:
            data = json.loads(p.read_text())
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {p}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {p} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        try:
            return cls(**data)
        except ValidationError as e:
            raise ConfigError(str(e)) from e

    def override(self, **updates: Any) -> "ExperimentConfig":
        """Apply dotted-key overrides, e.g. {"source.f": 0.4}; None values are skipped."""
        data = self.model_dump(mode="json")
        for key, value in updates.items():
            if value is None:
                continue
            node = data
            *parents, leaf = key.split(".")
            for part in parents:
                node = node[part]
            node[leaf] = value
        return ExperimentConfig.from_dict(data)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()
