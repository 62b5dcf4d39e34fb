"""
BL-6: Disturbance at equal eavesdropper information.

Eve's information and the errors she causes both grow linearly with the
intercepted fraction, so one fully intercepted run per channel gives the two
slopes. Solving slope * eta_E = target fixes eta_E for each channel and the
error rates there; the double channel's error is its symbol error rate, the
single channel's its bit error rate.
"""

from __future__ import annotations

import logging
import math

from pkg.errors import DomainError, UnreachableTargetError
from pkg.models.qkd import (
    ChannelReport,
    DisturbanceResult,
    DoubleEntangledState,
    EveKind,
    EveStrategy,
    InformationMetric,
)
from pkg.qkd.protocol import run_protocol, run_single_channel

logger = logging.getLogger(__name__)

PUBLISHED_RATIOS: dict[EveKind, float] = {
    EveKind.FIXED_BASIS: 3.0,
    EveKind.BREIDBART: 19.0 / 6.0,
}


def _rel2(value: float, err: float) -> float:
    return (err / value) ** 2 if value else 0.0


def _solve(channel: str, target: float, slope: float) -> float:
    if slope <= 0.0:
        raise UnreachableTargetError(f"{channel} channel: Eve gains no information even at eta_E = 1")
    eta = target / slope
    if eta > 1.0:
        raise UnreachableTargetError(
            f"{channel} channel: target {target:.4g} needs eta_E = {eta:.4g} > 1 (maximum {slope:.4g})"
        )
    return eta


def disturbance_ratio(
    eve_kind: EveKind,
    target_information: float,
    metric: InformationMetric = InformationMetric.FULL_SYMBOL,
    *,
    state: DoubleEntangledState | None = None,
    n_rounds: int = 200_000,
    seed: int = 0,
    confirm: bool = False,
) -> DisturbanceResult:
    """Ratio of AB error rates, double over single channel, at equal Eve information."""
    if eve_kind is EveKind.NONE:
        raise DomainError("a disturbance ratio needs an eavesdropper")
    if not target_information > 0.0:
        raise DomainError("target information must be positive")
    state = state or DoubleEntangledState()
    full = EveStrategy(kind=eve_kind, intercept_fraction=1.0)

    double = run_protocol(state, n_rounds, eve=full, seed=seed).report
    single = run_single_channel(n_rounds, full, seed, f_pol=state.f_pol.value).report
    info_d, info_d_err = double.information(metric)
    info_s, info_s_err = single.information(metric)
    err_d, err_d_err = double.symbol_error_rate, double.symbol_error_stderr
    err_s, err_s_err = single.qber, single.qber_stderr

    eta_d = _solve("double", target_information, info_d)
    eta_s = _solve("single", target_information, info_s)
    if err_s <= 0.0:
        raise UnreachableTargetError("single channel shows no errors at eta_E = 1; ratio undefined")

    ratio = (err_d * eta_d) / (err_s * eta_s)
    rel = _rel2(err_d, err_d_err) + _rel2(err_s, err_s_err) + _rel2(info_d, info_d_err) + _rel2(info_s, info_s_err)
    stderr = abs(ratio) * math.sqrt(rel)
    logger.info(
        "disturbance %s/%s: eta_single=%.4g eta_double=%.4g ratio=%.4g +- %.2g",
        eve_kind.value, metric.value, eta_s, eta_d, ratio, stderr,
    )

    confirmed_s = confirmed_d = None
    if confirm:
        confirmed_d = _information(run_protocol(state, n_rounds, eve=full.with_fraction(eta_d), seed=seed + 1).report, metric)
        confirmed_s = _information(
            run_single_channel(n_rounds, full.with_fraction(eta_s), seed + 1, f_pol=state.f_pol.value).report, metric
        )

    return DisturbanceResult(
        eve_kind=eve_kind,
        metric=metric,
        target_information=target_information,
        eta_single=eta_s,
        eta_double=eta_d,
        error_single=err_s * eta_s,
        error_double=err_d * eta_d,
        ratio=ratio,
        ratio_stderr=stderr,
        significance=(ratio - 1.0) / stderr if stderr > 0.0 else None,
        published_ratio=PUBLISHED_RATIOS.get(eve_kind),
        confirmed_information_single=confirmed_s,
        confirmed_information_double=confirmed_d,
    )


def _information(report: ChannelReport, metric: InformationMetric) -> float:
    return report.information(metric)[0]
