"""
BL-3: Local-realistic detection-rate bound.

In the stochastic-optics model a detector can register at most

    R_S < eta F^2 R_c^2 / (2 L d^2 lambda sqrt(tau T))

singles per second. Given an observed R_S the bound fixes the absorption time
T; the model is self-consistent only while T stays below about 10 ns.
"""

from __future__ import annotations

import logging
import math

from pkg.errors import DomainError
from pkg.models.lhv import (
    DEFAULT_T_LIMIT,
    DEFAULT_VISIBILITY_THRESHOLD,
    CasadoParameters,
    ExclusionVerdict,
    RateBound,
    Verdict,
)

logger = logging.getLogger(__name__)


def _prefactor(p: CasadoParameters) -> float:
    """eta F^2 R_c^2 / (2 L d^2 lambda), in 1/s * sqrt(s^2)."""
    return p.eta * p.F ** 2 * p.R_c ** 2 / (2.0 * p.L * p.d ** 2 * p.wavelength)


def casado_rate_bound(p: CasadoParameters) -> RateBound:
    """Right-hand side of the bound in counts/s; needs T."""
    if p.T is None:
        raise DomainError("the rate bound needs the absorption time T")
    if p.eta == 0.0:
        logger.warning("casado_rate_bound: eta = 0, bound is degenerate")
        return RateBound(rate=0.0, degenerate=True)
    return RateBound(rate=_prefactor(p) / math.sqrt(p.tau * p.T))


def solve_T(p: CasadoParameters, R_S: float | None = None) -> float:
    """Absorption time at which the bound holds with equality for singles rate R_S."""
    rate = R_S if R_S is not None else p.R_S
    if rate is None or not rate > 0.0:
        raise DomainError(f"singles rate R_S must be positive, got {rate}")
    if p.eta == 0.0:
        raise DomainError("eta = 0 admits no absorption time")
    return (_prefactor(p) / rate) ** 2 / p.tau


def exclusion_verdict(
    p: CasadoParameters,
    observed_visibility: float,
    observed_ch_positive: bool,
    *,
    R_S: float | None = None,
    T_limit: float = DEFAULT_T_LIMIT,
    visibility_threshold: float = DEFAULT_VISIBILITY_THRESHOLD,
) -> ExclusionVerdict:
    """Decide whether the observations rule out the model.

    Excluded when the solved T exceeds T_limit and the data agree with quantum
    mechanics (CH > 0 or visibility above threshold). A T within the limit
    leaves the model self-consistent: not excluded. Otherwise inconclusive.
    """
    if not 0.0 <= observed_visibility <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {observed_visibility}")
    rate = R_S if R_S is not None else p.R_S
    T = solve_T(p, rate)
    conditions: list[str] = []
    t_exceeds = T > T_limit
    vis_high = observed_visibility > visibility_threshold
    if t_exceeds:
        conditions.append(f"T={T:.3g} s exceeds the {T_limit:.3g} s admissibility limit")
    if observed_ch_positive:
        conditions.append("CH inequality violated")
    if vis_high:
        conditions.append(f"visibility {observed_visibility:.3g} above {visibility_threshold:.3g}")

    if not t_exceeds:
        verdict = Verdict.NOT_EXCLUDED
        rationale = f"T={T:.3g} s is within the {T_limit:.3g} s limit; the model stays self-consistent"
    elif observed_ch_positive or vis_high:
        verdict = Verdict.EXCLUDED
        rationale = "; ".join(conditions)
    else:
        verdict = Verdict.INCONCLUSIVE
        rationale = f"T={T:.3g} s exceeds the limit but neither CH > 0 nor high visibility was observed"

    logger.info("exclusion verdict: %s (%s)", verdict.value, rationale)
    return ExclusionVerdict(
        verdict=verdict,
        T_solved=T,
        T_limit=T_limit,
        R_S=float(rate),
        visibility=observed_visibility,
        visibility_threshold=visibility_threshold,
        ch_positive=observed_ch_positive,
        conditions=conditions,
        rationale=rationale,
    )
