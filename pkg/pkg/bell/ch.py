"""
BL-2: Clauser-Horne sum.

    CH = N(t1,t2) - N(t1,t2') + N(t1',t2) + N(t1',t2') - N(t1') - N(t2)

is never positive for a local realistic theory. In the substituted form the
singles N(t1'), N(t2) are replaced by coincidences with the other analyzer
removed, so every term carries eta1*eta2. In the strict form the singles keep
only their own arm's efficiency.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from pkg.errors import DomainError
from pkg.models.bell import ChConfiguration, ChCountResult, ChForm, ChResult, RateModel
from pkg.models.optics import AnalyzerSetting, BiphotonState, Transmittance
from pkg.polarization.core import coincidence_grid, coincidence_pairs, coincidence_prob

logger = logging.getLogger(__name__)


def _coincidence_terms(state: BiphotonState, config: ChConfiguration) -> list[float]:
    return [
        coincidence_prob(state, config.arm1(), config.arm2()),
        coincidence_prob(state, config.arm1(), config.arm2(primed=True)),
        coincidence_prob(state, config.arm1(primed=True), config.arm2()),
        coincidence_prob(state, config.arm1(primed=True), config.arm2(primed=True)),
    ]


def _unanalyzed_terms(state: BiphotonState, config: ChConfiguration) -> tuple[float, float]:
    absent = AnalyzerSetting.absent()
    return (
        coincidence_prob(state, config.arm1(primed=True), absent),
        coincidence_prob(state, absent, config.arm2()),
    )


def ch_substituted(state: BiphotonState, config: ChConfiguration) -> ChResult:
    """CH with N(t1', inf) and N(inf, t2) in place of the singles."""
    arm1, arm2 = config.efficiencies
    w = arm1.coincidence_weight(arm2)
    s1, s2 = _unanalyzed_terms(state, config)
    terms = [w * p for p in _coincidence_terms(state, config)] + [w * s1, w * s2]
    return ChResult.from_terms(tuple(terms), ChForm.SUBSTITUTED)


def ch_strict(state: BiphotonState, config: ChConfiguration) -> ChResult:
    """CH with true singles weighted by their own arm's efficiency."""
    arm1, arm2 = config.efficiencies
    w = arm1.coincidence_weight(arm2)
    s1, s2 = _unanalyzed_terms(state, config)
    terms = [w * p for p in _coincidence_terms(state, config)] + [arm1.eta * s1, arm2.eta * s2]
    return ChResult.from_terms(tuple(terms), ChForm.STRICT)


def evaluate(state: BiphotonState, config: ChConfiguration, form: ChForm) -> ChResult:
    if form is ChForm.STRICT:
        return ch_strict(state, config)
    return ch_substituted(state, config)


class ChObjective:
    """Vectorized CH value over many angle sets for one state and apparatus.

    Angles are in degrees, stacked along the last axis as
    (theta1, theta2, theta1p, theta2p).
    """

    def __init__(
        self,
        state: BiphotonState,
        analyzer1: Transmittance | None = None,
        analyzer2: Transmittance | None = None,
        eta1: float = 1.0,
        eta2: float = 1.0,
        form: ChForm = ChForm.SUBSTITUTED,
    ):
        self.state = state
        self.t1 = analyzer1 or Transmittance()
        self.t2 = analyzer2 or Transmittance()
        self.eta1 = eta1
        self.eta2 = eta2
        self.form = form
        self.w = eta1 * eta2
        if form is ChForm.STRICT:
            self.k1, self.k2 = eta1, eta2
        else:
            self.k1 = self.k2 = self.w

    @classmethod
    def for_config(cls, state: BiphotonState, config: ChConfiguration, form: ChForm) -> "ChObjective":
        return cls(state, config.analyzer1, config.analyzer2, config.eta1, config.eta2, form)

    def values(self, angles: np.ndarray) -> np.ndarray:
        a = np.asarray(angles, dtype=float)
        t1, t2, t1p, t2p = a[..., 0], a[..., 1], a[..., 2], a[..., 3]

        def p(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            return coincidence_pairs(self.state, x, y, self.t1, self.t2)

        s1 = coincidence_pairs(self.state, t1p, 0.0, self.t1, None)
        s2 = coincidence_pairs(self.state, 0.0, t2, None, self.t2)
        return (self.w * (p(t1, t2) - p(t1, t2p) + p(t1p, t2) + p(t1p, t2p))
                - self.k1 * s1 - self.k2 * s2)

    def value(self, angles: tuple[float, float, float, float]) -> float:
        return float(self.values(np.asarray(angles, dtype=float)))

    def tables(self, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coincidence table P[i, j] and weighted singles m1[k], m2[j] on a 1-D angle grid."""
        table = coincidence_grid(self.state, grid, grid, self.t1, self.t2)
        m1 = self.k1 * coincidence_grid(self.state, grid, [0.0], self.t1, None)[:, 0]
        m2 = self.k2 * coincidence_grid(self.state, [0.0], grid, None, self.t2)[0, :]
        return table, m1, m2


def ch_counts(
    state: BiphotonState,
    config: ChConfiguration,
    rate_model: RateModel,
    efficiencies: tuple[float, float] | None = None,
) -> ChCountResult:
    """Substituted CH in coincidences per second with its Poisson standard error.

    Background adds the same accidental rate to every term, so it cancels in
    the value and only widens the error.
    """
    if rate_model.acquisition <= 0.0:
        raise DomainError("acquisition time must be positive")
    if efficiencies is not None:
        config = config.with_efficiency(*efficiencies)
    result = ch_substituted(state, config)
    rates = tuple(rate_model.pair_rate * t + rate_model.background_rate for t in result.terms)
    value = rate_model.pair_rate * result.value
    total_counts = math.fsum(rates) * rate_model.acquisition
    stderr = math.sqrt(total_counts) / rate_model.acquisition
    significance = value / stderr if stderr > 0.0 else None
    logger.debug("ch_counts: value=%.6g /s stderr=%.6g /s", value, stderr)
    return ChCountResult(
        value=value,
        stderr=stderr,
        term_rates=rates,
        acquisition=rate_model.acquisition,
        significance=significance,
    )


def restricted_optimum(f: float, analyzer1: Transmittance | None = None,
                       analyzer2: Transmittance | None = None) -> ChConfiguration:
    """Best angles with theta2 = 45, theta2' = 0 for real f and ideal polarizers.

    theta1' = atan(2f / (1 + f^2)) / 2 and theta1 = 90 - theta1'.
    """
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"restricted optimum needs real f in [0, 1], got {f}")
    t1p = 0.5 * math.degrees(math.atan(2.0 * f / (1.0 + f * f)))
    return ChConfiguration(
        theta1=90.0 - t1p,
        theta2=45.0,
        theta1p=t1p,
        theta2p=0.0,
        analyzer1=analyzer1 or Transmittance(),
        analyzer2=analyzer2 or Transmittance(),
    )


def f_for_angle(theta1p: float) -> float:
    """Real f in (0, 1] whose restricted optimum has the given theta1' (degrees)."""
    if not 0.0 < theta1p <= 22.5:
        raise DomainError(f"theta1' must lie in (0, 22.5] degrees, got {theta1p}")
    t = math.tan(math.radians(2.0 * theta1p))
    return (1.0 - math.sqrt(max(1.0 - t * t, 0.0))) / t
