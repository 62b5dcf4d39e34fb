"""
BL-3: Local-realistic rate bound models.

Parameters of the stochastic-optics detection bound, all in SI units.
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

# Mean of the 789 nm and 633 nm detection wavelengths
DEFAULT_WAVELENGTH = 711e-9
# Absorption time above which the model stops being self-consistent
DEFAULT_T_LIMIT = 1e-8
DEFAULT_VISIBILITY_THRESHOLD = 0.9


class CasadoParameters(BaseModel):
    """Inputs of the rate bound R_S < eta F^2 R_c^2 / (2 L d^2 lambda sqrt(tau T)).

    T and R_S are optional: the bound needs T, solving for T needs R_S.
    eta = 0 is accepted and gives the degenerate zero bound.
    """
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    eta: float = Field(default=0.51, ge=0.0, le=1.0)
    F: float = Field(default=0.009, gt=0.0)  # lens focal distance, m
    R_c: float = Field(default=0.001, gt=0.0)  # active radius of the crystal, m
    tau: float = Field(default=4.2e-13, gt=0.0)  # coherence time, s
    d: float = Field(default=0.75, gt=0.0)  # crystal to detector, m
    wavelength: float = Field(default=DEFAULT_WAVELENGTH, gt=0.0, alias="lambda")  # m
    L: float = Field(default=3e-5, gt=0.0)  # active depth of the detector, m
    T: float | None = Field(default=None, gt=0.0)  # absorption time, s
    R_S: float | None = Field(default=None, gt=0.0)  # singles rate, 1/s

    def with_T(self, T: float) -> "CasadoParameters":
        return CasadoParameters(**{**self.model_dump(), "T": T})

    def with_rate(self, R_S: float) -> "CasadoParameters":
        return CasadoParameters(**{**self.model_dump(), "R_S": R_S})


class RateBound(BaseModel):
    """Right-hand side of the bound in counts/s."""
    model_config = ConfigDict(frozen=True)

    rate: float
    degenerate: bool = False  # eta = 0


class Verdict(str, Enum):
    """Whether an experiment rules out the local-realistic model."""
    EXCLUDED = "excluded"
    NOT_EXCLUDED = "not-excluded"
    INCONCLUSIVE = "inconclusive"


class ExclusionVerdict(BaseModel):
    """Verdict plus the numbers and conditions that produced it."""
    verdict: Verdict
    T_solved: float  # s
    T_limit: float  # s
    R_S: float  # 1/s
    visibility: float
    visibility_threshold: float
    ch_positive: bool
    conditions: list[str] = Field(default_factory=list)
    rationale: str = ""
