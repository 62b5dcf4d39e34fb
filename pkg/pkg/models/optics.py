"""
BL-1: Polarization state and analyzer models.

Angles are in degrees measured from the vertical axis, so an H-polarized
photon passes an ideal analyzer at theta with probability sin^2(theta).
"""

from __future__ import annotations

import cmath
import math
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ComplexAmplitude(BaseModel):
    """Complex number with finite components."""
    model_config = ConfigDict(frozen=True)

    re: float = 0.0
    im: float = 0.0

    @field_validator("re", "im")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("complex amplitude components must be finite")
        return v

    @classmethod
    def of(cls, value: complex | float | int | "ComplexAmplitude") -> "ComplexAmplitude":
        if isinstance(value, ComplexAmplitude):
            return value
        z = complex(value)
        return cls(re=z.real, im=z.imag)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def abs2(self) -> float:
        return self.re * self.re + self.im * self.im


def _coerce_amplitude(v: Any) -> Any:
    if isinstance(v, (int, float, complex)):
        return ComplexAmplitude.of(v)
    return v


class BellState(str, Enum):
    """The four maximally entangled states reachable from the source."""
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"


class BiphotonState(BaseModel):
    """(|H>|H> + f|V>|V>) / sqrt(1 + |f|^2).

    With swap_arm2 set, arm 2 carries a half-wave rotation exchanging H and V,
    giving (|H>|V> + f|V>|H>) / sqrt(1 + |f|^2).
    """
    model_config = ConfigDict(frozen=True)

    f: ComplexAmplitude = Field(default_factory=lambda: ComplexAmplitude(re=1.0))
    swap_arm2: bool = False

    @field_validator("f", mode="before")
    @classmethod
    def _coerce_f(cls, v: Any) -> Any:
        return _coerce_amplitude(v)

    @classmethod
    def with_f(cls, f: complex | float) -> "BiphotonState":
        return cls(f=ComplexAmplitude.of(f))

    @classmethod
    def bell(cls, kind: BellState) -> "BiphotonState":
        """Bell states via the phase of f or a rotated branch."""
        sign = -1.0 if kind in (BellState.PHI_MINUS, BellState.PSI_MINUS) else 1.0
        swap = kind in (BellState.PSI_PLUS, BellState.PSI_MINUS)
        return cls(f=ComplexAmplitude(re=sign), swap_arm2=swap)

    @property
    def f_value(self) -> complex:
        return self.f.value

    @property
    def norm(self) -> float:
        """1 + |f|^2."""
        return 1.0 + self.f.abs2

    def relabeled(self) -> "BiphotonState":
        """Same physical state with H and V exchanged: f -> 1/f*."""
        if self.f.abs2 == 0.0:
            raise ValueError("product state |HH> has no H<->V relabeling with finite f")
        return BiphotonState(f=ComplexAmplitude.of(1.0 / self.f_value.conjugate()), swap_arm2=self.swap_arm2)

    def state_vector(self) -> tuple[complex, complex, complex, complex]:
        """Amplitudes on |HH>, |HV>, |VH>, |VV> (arm 1 first)."""
        n = math.sqrt(self.norm)
        f = self.f_value
        if self.swap_arm2:
            return (0j, 1.0 / n + 0j, f / n, 0j)
        return (1.0 / n + 0j, 0j, 0j, f / n)

    @property
    def phase(self) -> float:
        """Argument of f in radians."""
        return cmath.phase(self.f_value)


class AnalyzerSetting(BaseModel):
    """A polarizer on one arm.

    eps_par is the transmittance for light polarized along the axis, eps_perp
    for light polarized normal to it. present=False models the absent
    analyzer (unit transmittance for every polarization).
    """
    model_config = ConfigDict(frozen=True)

    theta: float = 0.0
    eps_par: float = Field(default=1.0, ge=0.0, le=1.0)
    eps_perp: float = Field(default=0.0, ge=0.0, le=1.0)
    present: bool = True

    @field_validator("theta")
    @classmethod
    def _reduce(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("analyzer angle must be finite")
        return float(v) % 180.0

    @model_validator(mode="after")
    def _ordered(self) -> "AnalyzerSetting":
        if self.eps_perp > self.eps_par:
            raise ValueError(
                f"eps_perp ({self.eps_perp}) must not exceed eps_par ({self.eps_par})"
            )
        return self

    @classmethod
    def ideal(cls, theta: float) -> "AnalyzerSetting":
        return cls(theta=theta, eps_par=1.0, eps_perp=0.0)

    @classmethod
    def absent(cls) -> "AnalyzerSetting":
        return cls(theta=0.0, eps_par=1.0, eps_perp=1.0, present=False)

    def rotated_to(self, theta: float) -> "AnalyzerSetting":
        return self.model_copy(update={"theta": float(theta) % 180.0})


class Transmittance(BaseModel):
    """Polarizer quality without an angle: (eps_par, eps_perp)."""
    model_config = ConfigDict(frozen=True)

    eps_par: float = Field(default=1.0, ge=0.0, le=1.0)
    eps_perp: float = Field(default=0.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _ordered(self) -> "Transmittance":
        if self.eps_perp > self.eps_par:
            raise ValueError("eps_perp must not exceed eps_par")
        return self

    @property
    def is_ideal(self) -> bool:
        return self.eps_par == 1.0 and self.eps_perp == 0.0

    def at(self, theta: float) -> AnalyzerSetting:
        return AnalyzerSetting(theta=theta, eps_par=self.eps_par, eps_perp=self.eps_perp)


class ArmEfficiency(BaseModel):
    """Overall detection efficiency of one arm."""
    model_config = ConfigDict(frozen=True)

    eta: float = Field(default=1.0, ge=0.0, le=1.0)

    def coincidence_weight(self, other: "ArmEfficiency") -> float:
        """Probability that both photons of a pair are detected."""
        return self.eta * other.eta


class FringeMode(str, Enum):
    """How a fringe scan is turned into a visibility."""
    CONDITIONAL = "conditional"  # coincidence / movable-arm single probability
    RAW = "raw"  # coincidence probability as measured


class FringeScan(BaseModel):
    """Columns of a movable-analyzer scan."""
    model_config = ConfigDict(frozen=True)

    fixed_theta: float
    angles: list[float]
    coincidence: list[float]
    single: list[float]
