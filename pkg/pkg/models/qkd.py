"""
BL-6: d=4 key distribution models.

A key symbol carries two bits: one in polarization, one in the time-bin
phase read out in the central slot of an unbalanced interferometer. Phases
are in radians.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pkg.models.optics import ComplexAmplitude

TWO_PI = 2.0 * math.pi


def _reduce_phase(v: float) -> float:
    if not math.isfinite(v):
        raise ValueError("phase must be finite")
    r = float(v) % TWO_PI
    return 0.0 if r == TWO_PI else r


class PolBasis(str, Enum):
    """Polarization measurement bases."""
    Z = "Z"  # H / V
    X = "X"  # +45 / -45
    BREIDBART = "B"  # 22.5 degrees between Z and X


class TimeSlot(str, Enum):
    EARLY = "early"
    CENTRAL = "central"
    LATE = "late"


class Arm(str, Enum):
    ALICE = "alice"
    BOB = "bob"


class Dof(str, Enum):
    """Degrees of freedom Eve can attack."""
    POLARIZATION = "polarization"
    PHASE = "phase"
    BOTH = "both"

    def covers(self, other: "Dof") -> bool:
        return self is Dof.BOTH or self is other


class EveKind(str, Enum):
    NONE = "none"
    FIXED_BASIS = "fixed-basis"  # one of the protocol bases, chosen per round
    BREIDBART = "breidbart"  # intermediate basis


class InformationMetric(str, Enum):
    """How Eve's knowledge is measured when comparing channels."""
    MUTUAL_INFORMATION = "mutual-information"  # bits per key bit
    FULL_SYMBOL = "full-symbol"  # posterior margin on the whole symbol


class PumpPathState(BaseModel):
    """Pump photon after the first unbalanced interferometer: (|s> + e^{i phi}|l>)/sqrt(2)."""
    model_config = ConfigDict(frozen=True)

    phi: float = 0.0

    @field_validator("phi")
    @classmethod
    def _phase(cls, v: float) -> float:
        return _reduce_phase(v)


class DoubleEntangledState(BaseModel):
    """Polarization (|HH> + f|VV>) times time-bin (|ss> + e^{i phi}|ll>) entanglement."""
    model_config = ConfigDict(frozen=True)

    phi: float = 0.0
    f_pol: ComplexAmplitude = Field(default_factory=lambda: ComplexAmplitude(re=1.0))

    @field_validator("phi")
    @classmethod
    def _phase(cls, v: float) -> float:
        return _reduce_phase(v)

    @field_validator("f_pol", mode="before")
    @classmethod
    def _coerce(cls, v: Any) -> Any:
        if isinstance(v, (int, float, complex)):
            return ComplexAmplitude.of(v)
        return v

    @property
    def pump(self) -> PumpPathState:
        return PumpPathState(phi=self.phi)


class ObserverSettings(BaseModel):
    """Polarizer basis and long-arm phase of one observer's interferometer."""
    model_config = ConfigDict(frozen=True)

    pol_basis: PolBasis = PolBasis.Z
    phase_setting: float = 0.0

    @field_validator("phase_setting")
    @classmethod
    def _phase(cls, v: float) -> float:
        return _reduce_phase(v)


class ObserverPolicy(BaseModel):
    """How an observer picks settings each round.

    phase_settings are the two long-arm phases; None means the protocol
    defaults (0, pi/2 for Alice; phi, phi - pi/2 for Bob so that matching
    indices are perfectly correlated).
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    z_probability: float = Field(default=0.5, ge=0.0, le=1.0)
    first_phase_probability: float = Field(default=0.5, ge=0.0, le=1.0)
    phase_settings: tuple[float, float] | None = None


class DetectionEvent(BaseModel):
    """One detector click."""
    model_config = ConfigDict(frozen=True)

    arm: Arm
    time_slot: TimeSlot
    pol_outcome: int = Field(ge=0, le=1)
    phase_outcome: int | None = None

    @model_validator(mode="after")
    def _phase_only_central(self) -> "DetectionEvent":
        if self.time_slot is not TimeSlot.CENTRAL and self.phase_outcome is not None:
            raise ValueError("phase outcome exists only for central-slot detections")
        if self.phase_outcome is not None and self.phase_outcome not in (0, 1):
            raise ValueError("phase outcome is a bit")
        return self


class EveStrategy(BaseModel):
    """Intercept-resend attack on the photon travelling to Bob."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: EveKind = EveKind.NONE
    intercept_fraction: float = Field(default=0.0, ge=0.0, le=1.0)
    which_dofs: Dof = Dof.BOTH

    @property
    def active(self) -> bool:
        return self.kind is not EveKind.NONE and self.intercept_fraction > 0.0

    def with_fraction(self, eta_e: float) -> "EveStrategy":
        return EveStrategy(kind=self.kind, intercept_fraction=eta_e, which_dofs=self.which_dofs)


class MeasurementDistribution(BaseModel):
    """Joint outcome probabilities given both observers detect in the central slot.

    joint[pa][pb][xa][xb] with pa/pb polarization bits and xa/xb phase bits.
    """
    model_config = ConfigDict(frozen=True)

    joint: list[list[list[list[float]]]]
    postselection: float  # both observers central
    central_alice: float
    central_bob: float

    def prob(self, pa: int, pb: int, xa: int, xb: int) -> float:
        return self.joint[pa][pb][xa][xb]

    def pol_marginal(self) -> list[list[float]]:
        return [[sum(self.joint[pa][pb][xa][xb] for xa in (0, 1) for xb in (0, 1))
                 for pb in (0, 1)] for pa in (0, 1)]

    def phase_marginal(self) -> list[list[float]]:
        return [[sum(self.joint[pa][pb][xa][xb] for pa in (0, 1) for pb in (0, 1))
                 for xb in (0, 1)] for xa in (0, 1)]


class ChannelReport(BaseModel):
    """Aggregated outcome of a protocol run."""
    channel: str  # "double" or "single"
    eve_kind: EveKind = EveKind.NONE
    intercept_fraction: float = 0.0
    bits_per_symbol: int = 2
    n_rounds: int = 0
    n_postselected: int = 0
    n_sifted: int = 0
    sifted_rate: float = 0.0  # sifted / post-selected
    qber: float = 0.0
    qber_stderr: float = 0.0
    qber_pol: float | None = None
    qber_phase: float | None = None
    symbol_error_rate: float = 0.0
    symbol_error_stderr: float = 0.0
    I_AE_mutual: float = 0.0  # bits per symbol
    I_AE_mutual_stderr: float = 0.0
    I_AE_per_bit: float = 0.0  # bits per key bit
    P_full_symbol: float = 0.0
    P_full_symbol_stderr: float = 0.0
    eve_guess_rate: float = 0.0
    eve_guess_stderr: float = 0.0
    empty_sifted: bool = False

    def information(self, metric: InformationMetric) -> tuple[float, float]:
        """(value, stderr) of the requested Eve-information metric."""
        if metric is InformationMetric.MUTUAL_INFORMATION:
            b = self.bits_per_symbol
            return self.I_AE_per_bit, self.I_AE_mutual_stderr / b
        return self.P_full_symbol, self.P_full_symbol_stderr


class RoundRecord(BaseModel):
    """One transcript line."""
    round: int
    alice_pol_basis: str
    bob_pol_basis: str
    alice_phase_index: int | None = None
    bob_phase_index: int | None = None
    alice_slot: str | None = None
    bob_slot: str | None = None
    alice_pol: int
    bob_pol: int
    alice_phase: int | None = None
    bob_phase: int | None = None
    eve_intercepted: bool = False
    eve_pol_basis: str | None = None
    eve_phase_index: int | None = None
    eve_pol: int | None = None
    eve_phase: int | None = None
    sifted: bool = False


class ProtocolRun(BaseModel):
    """Report plus the sifted keys (and optional transcript) of one run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    report: ChannelReport
    alice_key: list[int] = Field(default_factory=list)  # symbols 0..3 (or bits on one DOF)
    bob_key: list[int] = Field(default_factory=list)
    transcript: list[RoundRecord] | None = None


class DisturbanceResult(BaseModel):
    """Ratio of AB error rates (double / single) at equal Eve information."""
    eve_kind: EveKind
    metric: InformationMetric
    target_information: float
    eta_single: float
    eta_double: float
    error_single: float
    error_double: float
    ratio: float
    ratio_stderr: float
    significance: float | None = None  # (ratio - 1) / stderr
    published_ratio: float | None = None
    confirmed_information_single: float | None = None
    confirmed_information_double: float | None = None
