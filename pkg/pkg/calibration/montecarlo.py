"""
BL-4: Absolute detector calibration with down-converted pairs.

Every pair that fires the trigger detector (arm 2) has a partner headed to
the detector under test (arm 1), so eta1 = N_c / N_2 once accidental
coincidences and trigger dark counts are removed.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from pkg.errors import DomainError, EstimationError
from pkg.models.calibration import BiasRow, CalibrationCounts, CalibrationResult, CalibrationScenario
from pkg.montecarlo.rng import RngStream, poisson_sample

logger = logging.getLogger(__name__)

# Corrected trigger counts must clear the dark-count noise by this many sigma
_TRIGGER_SIGNIFICANCE = 5.0


def _survival(rate: float, dead_time: float) -> float:
    """Registered fraction of a non-paralyzable detector at true rate `rate`."""
    return 1.0 / (1.0 + rate * dead_time)


def _accidentals(n1: float, n2: float, nc: float, window: float, acquisition: float) -> float:
    """Uncorrelated-rate product: (N1 - Nc)(N2 - Nc) window / T."""
    return max(n1 - nc, 0.0) * max(n2 - nc, 0.0) * window / acquisition


def estimate(
    n1: int,
    n2: int,
    nc: int,
    scenario: CalibrationScenario,
) -> CalibrationResult:
    """eta1 from raw registers, correcting accidentals, trigger darks and dead time."""
    T = scenario.acquisition
    tau = scenario.dead_time
    # measured rate m = r / (1 + r tau), so the survival probability is 1 - m tau
    q1 = 1.0 - (n1 / T) * tau
    q2 = 1.0 - (n2 / T) * tau
    if q1 <= 0.0 or q2 <= 0.0:
        raise EstimationError("dead time saturates the detector; no survival left to invert")
    dark2 = scenario.dark2 * T * q2
    n2c = n2 - dark2
    floor = _TRIGGER_SIGNIFICANCE * math.sqrt(dark2) if dark2 > 0.0 else 0.0
    if n2c <= 0.0 or n2c <= floor:
        raise EstimationError(
            f"corrected trigger counts {n2c:.6g} are not above the dark level (N2={n2}, darks={dark2:.6g})"
        )
    acc = _accidentals(n1, n2, nc, scenario.coincidence_window, T)
    ratio = (nc - acc) / n2c
    eta_hat = ratio / q1
    var = (n2c * ratio * (1.0 - ratio) + acc + ratio * ratio * dark2) / (n2c * n2c)
    stderr = math.sqrt(max(var, 0.0)) / q1
    return CalibrationResult(
        eta1_hat=eta_hat,
        stderr=stderr,
        raw=CalibrationCounts(n1=n1, n2=n2, nc=nc, accidentals=acc, dark2_expected=dark2),
        scenario=scenario,
    )


def simulate_counts(scenario: CalibrationScenario, stream: RngStream) -> tuple[int, int, int]:
    """Draw (N1, N2, Nc) for one acquisition."""
    s = scenario
    g = stream.generator
    T = s.acquisition
    n_pairs = poisson_sample(stream, s.pair_rate * T)
    e1, e2 = s.eta1, s.eta2
    both, only1, only2, _ = (int(v) for v in g.multinomial(
        n_pairs, [e1 * e2, e1 * (1.0 - e2), (1.0 - e1) * e2, (1.0 - e1) * (1.0 - e2)]
    ))
    d1 = poisson_sample(stream, s.dark1 * T)
    d2 = poisson_sample(stream, s.dark2 * T)

    if s.dead_time > 0.0:
        q1 = _survival(e1 * s.pair_rate + s.dark1, s.dead_time)
        q2 = _survival(e2 * s.pair_rate + s.dark2, s.dead_time)
        kept1 = int(g.binomial(both, q1))
        coinc = int(g.binomial(kept1, q2))
        kept2 = coinc + int(g.binomial(both - kept1, q2))
        n1 = kept1 + int(g.binomial(only1 + d1, q1))
        n2 = kept2 + int(g.binomial(only2 + d2, q2))
    else:
        coinc = both
        n1 = both + only1 + d1
        n2 = both + only2 + d2

    acc_mean = _accidentals(n1, n2, coinc, s.coincidence_window, T)
    nc = coinc + poisson_sample(stream, acc_mean)
    return n1, n2, nc


def simulate_calibration(s: CalibrationScenario, stream: RngStream | None = None) -> CalibrationResult:
    """Simulate one acquisition and estimate eta1 from it."""
    if s.acquisition <= 0.0:
        raise DomainError("acquisition time must be positive")
    if s.window_occupancy > 0.01:
        logger.warning(
            "calibration: %.3g pairs per coincidence window; the accidental model assumes << 1",
            s.window_occupancy,
        )
    stream = stream or RngStream(s.seed)
    n1, n2, nc = simulate_counts(s, stream)
    result = estimate(n1, n2, nc, s)
    logger.debug("calibration seed=%d: N1=%d N2=%d Nc=%d eta1_hat=%.6f", s.seed, n1, n2, nc, result.eta1_hat)
    return result


def seed_batch(scenario: CalibrationScenario, n_seeds: int) -> list[CalibrationResult | EstimationError]:
    """Consecutive seeds starting at scenario.seed, in seed order; failures kept in place."""
    out: list[CalibrationResult | EstimationError] = []
    for k in range(n_seeds):
        try:
            out.append(simulate_calibration(scenario.with_seed(scenario.seed + k)))
        except EstimationError as e:
            out.append(e)
    return out


def estimator_bias_scan(scenarios: list[CalibrationScenario], n_seeds: int = 100) -> list[BiasRow]:
    """Seed-averaged bias of the estimator for every scenario."""
    if not scenarios:
        raise DomainError("scenario grid is empty")
    if n_seeds < 1:
        raise DomainError("need at least one seed per scenario")
    rows: list[BiasRow] = []
    for scenario in scenarios:
        batch = seed_batch(scenario, n_seeds)
        ok = [r for r in batch if isinstance(r, CalibrationResult)]
        failed = len(batch) - len(ok)
        if not ok:
            rows.append(BiasRow(
                scenario=scenario, n_seeds=n_seeds, n_failed=failed, flagged=True,
                note="every seed failed: no usable trigger counts",
            ))
            continue
        est = np.array([r.eta1_hat for r in ok])
        mean = float(est.mean())
        sem = float(est.std(ddof=1) / math.sqrt(est.size)) if est.size > 1 else float(ok[0].stderr)
        rows.append(BiasRow(
            scenario=scenario,
            n_seeds=n_seeds,
            n_failed=failed,
            mean_estimate=mean,
            bias=mean - scenario.eta1,
            stderr=sem,
            mean_reported_stderr=float(np.mean([r.stderr for r in ok])),
            coverage_2sigma=float(np.mean([r.within(2.0) for r in ok])),
            flagged=failed > 0,
            note=f"{failed} seed(s) failed" if failed else "",
        ))
    return rows
