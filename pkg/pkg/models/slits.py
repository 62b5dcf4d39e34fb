"""
BL-5: Two-photon double-slit models.

Geometry is in meters. Slit A is centered at -separation/2 and slit B at
+separation/2 on the transverse axis; detector positions are signed with 0 on
the symmetry axis.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Slit(str, Enum):
    A = "A"
    B = "B"


class PatternModel(str, Enum):
    """Which prediction a joint pattern represents."""
    SQM = "sqm"
    DBB = "dbb"


class SlitGeometry(BaseModel):
    """Double slit illuminated by the pair."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    separation: float = Field(default=100e-6, gt=0.0)  # center to center, m
    width: float = Field(default=10e-6, gt=0.0)  # m
    wavelength: float = Field(default=702e-9, gt=0.0)  # m
    relative_phase: float = 0.0  # rad, between the two exchange amplitudes

    @model_validator(mode="after")
    def _narrower_than_separation(self) -> "SlitGeometry":
        if self.width >= self.separation:
            raise ValueError("slit width must be smaller than the slit separation")
        return self

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    def center(self, which: Slit) -> float:
        half = 0.5 * self.separation
        return -half if which is Slit.A else half

    def fringe_period(self, distance: float) -> float:
        """lambda D / s on a plane at the given distance."""
        return self.wavelength * distance / self.separation

    def envelope_zero(self, distance: float) -> float:
        """First zero of the single-slit envelope, lambda D / w."""
        return self.wavelength * distance / self.width


class DetectorPlane(BaseModel):
    """A detection plane behind the slits."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    distance: float = Field(default=1.21, gt=0.0)  # m
    aperture: float = Field(default=6e-3, gt=0.0)  # collection diameter, m
    positions: list[float] = Field(default_factory=list)  # m

    def at(self, positions: list[float] | np.ndarray) -> "DetectorPlane":
        return self.model_copy(update={"positions": [float(x) for x in positions]})


class JointPattern(BaseModel):
    """Normalized coincidence density on an (x1, x2) grid.

    density[i, j] belongs to (x1[i], x2[j]). The density integrates to one
    over the grid; marginal1/marginal2 are its integrals over x2/x1.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    model: PatternModel
    x1: np.ndarray
    x2: np.ndarray
    density: np.ndarray
    marginal1: np.ndarray
    marginal2: np.ndarray

    @model_validator(mode="after")
    def _consistent(self) -> "JointPattern":
        if self.density.shape != (self.x1.size, self.x2.size):
            raise ValueError("density must have shape (len(x1), len(x2))")
        if np.any(self.density < 0.0):
            raise ValueError("joint density must be nonnegative")
        if self.marginal1.shape != self.x1.shape or self.marginal2.shape != self.x2.shape:
            raise ValueError("marginals must match their axes")
        return self

    def at(self, x1: float, x2: float) -> float:
        """Density at the grid node nearest to (x1, x2)."""
        i = int(np.argmin(np.abs(self.x1 - x1)))
        j = int(np.argmin(np.abs(self.x2 - x2)))
        return float(self.density[i, j])


class SinglesPattern(BaseModel):
    """Single-detector density on one plane, with the incoherent two-slit sum for reference."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x: np.ndarray
    density: np.ndarray
    incoherent: np.ndarray
    integration_half_width: float  # m, on the partner plane

    def relative_l2(self) -> float:
        """||density - incoherent|| / ||incoherent|| on the plane grid."""
        return float(np.linalg.norm(self.density - self.incoherent) / np.linalg.norm(self.incoherent))


class CountData(BaseModel):
    """Measured (or synthetic) coincidence counts at detector positions."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    positions: np.ndarray  # m
    counts: np.ndarray
    stderr: np.ndarray

    @model_validator(mode="after")
    def _aligned(self) -> "CountData":
        if not (self.positions.shape == self.counts.shape == self.stderr.shape):
            raise ValueError("positions, counts and stderr must have equal length")
        if np.any(self.stderr <= 0.0):
            raise ValueError("count uncertainties must be positive")
        return self

    @property
    def size(self) -> int:
        return int(self.positions.size)


class ChiSquareResult(BaseModel):
    """Weighted least-squares fit of a model shape to counts."""
    model_config = ConfigDict(frozen=True)

    model: str
    chi2: float
    dof: int
    reduced_chi2: float
    p_value: float
    parameters: dict[str, float] = Field(default_factory=dict)

    @property
    def rejected_at_5pct(self) -> bool:
        return self.p_value < 0.05
