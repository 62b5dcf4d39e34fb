"""
BL-1: Coincidence and singles probabilities through real polarizers.

A polarizer at angle theta (from vertical) with transmittances eps_par,
eps_perp acts on one photon as the effect

    E = eps_perp * I + (eps_par - eps_perp) * |a><a|,  |a> = sin(theta)|H> + cos(theta)|V>

so the coincidence probability is <psi| E1 (x) E2 |psi>. For ideal polarizers
this is |sin t1 sin t2 + f cos t1 cos t2|^2 / (1 + |f|^2). The absent analyzer
is the identity effect.
"""

from __future__ import annotations

import numpy as np

from pkg.errors import DomainError, UndefinedVisibilityError
from pkg.models.optics import AnalyzerSetting, BiphotonState, FringeMode, FringeScan, Transmittance

DEFAULT_SCAN_RESOLUTION = 720


def coefficient_matrix(state: BiphotonState) -> np.ndarray:
    """2x2 amplitudes c[i, j], i the arm-1 and j the arm-2 polarization (0=H, 1=V)."""
    return np.asarray(state.state_vector(), dtype=complex).reshape(2, 2)


def _axis(theta_deg: np.ndarray) -> np.ndarray:
    t = np.deg2rad(np.asarray(theta_deg, dtype=float))
    return np.stack([np.sin(t), np.cos(t)], axis=-1)


def _effect_terms(a: AnalyzerSetting) -> tuple[float, float]:
    """(eps_perp, eps_par - eps_perp); the absent analyzer is (1, 0)."""
    if not a.present:
        return 1.0, 0.0
    return a.eps_perp, a.eps_par - a.eps_perp


def coincidence_grid(
    state: BiphotonState,
    theta1: np.ndarray,
    theta2: np.ndarray,
    t1: Transmittance | None = None,
    t2: Transmittance | None = None,
) -> np.ndarray:
    """Coincidence probabilities on the outer grid theta1 x theta2 (degrees).

    A None transmittance means that arm has no analyzer.
    """
    c = coefficient_matrix(state)
    a = _axis(np.atleast_1d(theta1))
    b = _axis(np.atleast_1d(theta2))
    e1p, d1 = (1.0, 0.0) if t1 is None else (t1.eps_perp, t1.eps_par - t1.eps_perp)
    e2p, d2 = (1.0, 0.0) if t2 is None else (t2.eps_perp, t2.eps_par - t2.eps_perp)

    ac = a @ c  # (n1, 2): amplitudes left on arm 2 after projecting arm 1
    cb = c @ b.T  # (2, n2)
    m1 = (np.abs(ac) ** 2).sum(axis=1)  # <Pa (x) I>
    m2 = (np.abs(cb) ** 2).sum(axis=0)  # <I (x) Pb>
    joint = np.abs(ac @ b.T) ** 2  # <Pa (x) Pb>

    p = (e1p * e2p
         + e1p * d2 * m2[None, :]
         + d1 * e2p * m1[:, None]
         + d1 * d2 * joint)
    return np.clip(p, 0.0, 1.0)


def coincidence_pairs(
    state: BiphotonState,
    theta1: np.ndarray,
    theta2: np.ndarray,
    t1: Transmittance | None = None,
    t2: Transmittance | None = None,
) -> np.ndarray:
    """Like coincidence_grid but elementwise over broadcast angle arrays."""
    c = coefficient_matrix(state)
    t1a, t2a = np.broadcast_arrays(np.asarray(theta1, dtype=float), np.asarray(theta2, dtype=float))
    a = _axis(t1a)
    b = _axis(t2a)
    e1p, d1 = (1.0, 0.0) if t1 is None else (t1.eps_perp, t1.eps_par - t1.eps_perp)
    e2p, d2 = (1.0, 0.0) if t2 is None else (t2.eps_perp, t2.eps_par - t2.eps_perp)

    ac = a @ c
    cb = b @ c.T
    m1 = (np.abs(ac) ** 2).sum(axis=-1)
    m2 = (np.abs(cb) ** 2).sum(axis=-1)
    joint = np.abs((ac * b).sum(axis=-1)) ** 2
    p = e1p * e2p + e1p * d2 * m2 + d1 * e2p * m1 + d1 * d2 * joint
    return np.clip(p, 0.0, 1.0)


def single_grid(state: BiphotonState, theta: np.ndarray, t: Transmittance | None = None, arm: int = 1) -> np.ndarray:
    """Singles probabilities of one arm over a vector of angles."""
    if arm == 1:
        return coincidence_grid(state, theta, [0.0], t, None)[:, 0]
    if arm == 2:
        return coincidence_grid(state, [0.0], theta, None, t)[0, :]
    raise DomainError(f"arm must be 1 or 2, got {arm}")


def coincidence_prob(state: BiphotonState, a1: AnalyzerSetting, a2: AnalyzerSetting) -> float:
    """Probability that both photons pass their analyzers (absent analyzer passes everything)."""
    c = coefficient_matrix(state)
    a = _axis(a1.theta)
    b = _axis(a2.theta)
    e1p, d1 = _effect_terms(a1)
    e2p, d2 = _effect_terms(a2)
    ac = a @ c
    cb = c @ b
    m1 = float((np.abs(ac) ** 2).sum())
    m2 = float((np.abs(cb) ** 2).sum())
    joint = float(abs(ac @ b) ** 2)
    p = e1p * e2p + e1p * d2 * m2 + d1 * e2p * m1 + d1 * d2 * joint
    return min(max(p, 0.0), 1.0)


def single_prob(state: BiphotonState, analyzer: AnalyzerSetting, arm: int = 1) -> float:
    """Probability that the photon on `arm` passes; the other arm is unanalyzed."""
    if not analyzer.present:
        raise DomainError("single_prob needs an analyzer on the measured arm")
    absent = AnalyzerSetting.absent()
    if arm == 1:
        return coincidence_prob(state, analyzer, absent)
    if arm == 2:
        return coincidence_prob(state, absent, analyzer)
    raise DomainError(f"arm must be 1 or 2, got {arm}")


def fringe_scan(
    state: BiphotonState,
    fixed: AnalyzerSetting,
    steps: int = DEFAULT_SCAN_RESOLUTION,
    movable: Transmittance | None = None,
) -> FringeScan:
    """Rotate the arm-2 analyzer over [0, 180) with arm 1 held at `fixed`.

    The movable analyzer defaults to the fixed one's transmittances.
    """
    if steps < 4:
        raise DomainError(f"sweep resolution must be at least 4, got {steps}")
    if movable is None:
        movable = Transmittance(eps_par=fixed.eps_par, eps_perp=fixed.eps_perp)
    angles = np.arange(steps) * (180.0 / steps)
    t1 = Transmittance(eps_par=fixed.eps_par, eps_perp=fixed.eps_perp) if fixed.present else None
    coinc = coincidence_grid(state, [fixed.theta], angles, t1, movable)[0]
    single = single_grid(state, angles, movable, arm=2)
    return FringeScan(
        fixed_theta=fixed.theta,
        angles=angles.tolist(),
        coincidence=coinc.tolist(),
        single=single.tolist(),
    )


def visibility_of(values: np.ndarray) -> float:
    hi = float(np.max(values))
    lo = float(np.min(values))
    if hi + lo <= 0.0:
        raise UndefinedVisibilityError("fringe scan has N_max = N_min = 0")
    return (hi - lo) / (hi + lo)


def fringe_visibility(
    state: BiphotonState,
    fixed: AnalyzerSetting,
    sweep_resolution: int = DEFAULT_SCAN_RESOLUTION,
    *,
    movable: Transmittance | None = None,
    mode: FringeMode = FringeMode.CONDITIONAL,
) -> float:
    """(N_max - N_min) / (N_max + N_min) over a scan of the arm-2 analyzer.

    CONDITIONAL divides each coincidence by the movable arm's singles
    probability (points with no singles are skipped), so a product state
    gives 0. RAW uses the coincidences directly.
    """
    scan = fringe_scan(state, fixed, sweep_resolution, movable)
    coinc = np.asarray(scan.coincidence)
    if mode is FringeMode.RAW:
        return visibility_of(coinc)
    single = np.asarray(scan.single)
    ok = single > 1e-15
    if not np.any(ok):
        raise UndefinedVisibilityError("movable arm never transmits")
    return visibility_of(coinc[ok] / single[ok])
