"""
BL-5: Far-field two-photon double slit.

Each photon crosses exactly one slit. A photon from slit j reaches transverse
position x on a plane at distance D with the Fraunhofer amplitude

    psi_j(x) = sinc(w x / (lambda D)) * exp(-i k a_j x / D),  a_A = -s/2, a_B = +s/2

Standard quantum mechanics adds the two exchange paths coherently,
Psi = psi_A(x1) psi_B(x2) + e^{i chi} psi_B(x1) psi_A(x2), giving fourth-order
fringes in x1/D1 - x2/D2 with period lambda/s. The de Broglie-Bohm comparator
keeps each photon in the half plane of its slit and drops the interference.

Detector apertures are averaged with 16-point Gauss-Legendre quadrature.
Because the two-photon density is a sum of products of one-photon factors,
the aperture average factorizes per plane.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.integrate import trapezoid

from pkg.errors import FraunhoferError, GridResolutionError
from pkg.models.optics import ComplexAmplitude
from pkg.models.slits import DetectorPlane, JointPattern, PatternModel, SinglesPattern, Slit, SlitGeometry

logger = logging.getLogger(__name__)

FRESNEL_LIMIT = 0.1
MIN_STEPS_PER_PERIOD = 4
APERTURE_NODES = 16
# partner-plane integration must cover this many envelope zeros on each side
MIN_ENVELOPE_ZEROS = 3

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(APERTURE_NODES)


def fresnel_numbers(g: SlitGeometry, distance: float) -> tuple[float, float]:
    """(w^2, s^2) / (lambda D) for the slit width and the slit separation."""
    scale = g.wavelength * distance
    return g.width ** 2 / scale, g.separation ** 2 / scale


def check_fraunhofer(g: SlitGeometry, distance: float) -> None:
    fw, fs = fresnel_numbers(g, distance)
    if max(fw, fs) > FRESNEL_LIMIT:
        raise FraunhoferError(
            f"Fresnel numbers {fw:.3g} (width) / {fs:.3g} (separation) at D={distance} m "
            f"exceed {FRESNEL_LIMIT}; far-field amplitudes are not valid"
        )


def slit_amplitudes(g: SlitGeometry, which: Slit, distance: float, x: np.ndarray) -> np.ndarray:
    """Vectorized psi_which(x) on a plane at `distance`."""
    x = np.asarray(x, dtype=float)
    envelope = np.sinc(g.width * x / (g.wavelength * distance))
    return envelope * np.exp(-1j * g.wavenumber * g.center(which) * x / distance)


def slit_amplitude(g: SlitGeometry, which: Slit, plane: DetectorPlane, x: float) -> ComplexAmplitude:
    """Far-field amplitude from one slit at transverse position x (m)."""
    check_fraunhofer(g, plane.distance)
    return ComplexAmplitude.of(complex(slit_amplitudes(g, which, plane.distance, np.asarray(x))))


def _aperture_factors(g: SlitGeometry, plane: DetectorPlane, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Aperture-averaged |psi_A|^2, |psi_B|^2 and psi_A conj(psi_B) at each center position."""
    offsets = 0.5 * plane.aperture * _GL_NODES
    pts = x[:, None] + offsets[None, :]
    wts = 0.5 * _GL_WEIGHTS
    a = slit_amplitudes(g, Slit.A, plane.distance, pts)
    b = slit_amplitudes(g, Slit.B, plane.distance, pts)
    aa = (np.abs(a) ** 2) @ wts
    bb = (np.abs(b) ** 2) @ wts
    ab = (a * np.conj(b)) @ wts
    return aa, bb, ab


def _axis(values: list[float] | np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise GridResolutionError(f"{name} needs at least two positions")
    if np.any(np.diff(x) <= 0.0):
        raise GridResolutionError(f"{name} positions must be strictly increasing")
    return x


def _check_resolution(g: SlitGeometry, plane: DetectorPlane, x: np.ndarray, name: str) -> None:
    period = g.fringe_period(plane.distance)
    step = float(np.max(np.diff(x)))
    if step > period / MIN_STEPS_PER_PERIOD:
        raise GridResolutionError(
            f"{name} grid step {step:.3g} m is coarser than a quarter of the fringe period {period:.3g} m"
        )


def _normalized(model: PatternModel, x1: np.ndarray, x2: np.ndarray, density: np.ndarray) -> JointPattern:
    total = trapezoid(trapezoid(density, x2, axis=1), x1)
    if not total > 0.0:
        raise GridResolutionError("pattern vanishes on the evaluation grid")
    density = density / total
    return JointPattern(
        model=model,
        x1=x1,
        x2=x2,
        density=density,
        marginal1=trapezoid(density, x2, axis=1),
        marginal2=trapezoid(density, x1, axis=0),
    )


def joint_density(
    g: SlitGeometry,
    plane1: DetectorPlane,
    plane2: DetectorPlane,
    x1: np.ndarray,
    x2: np.ndarray,
) -> np.ndarray:
    """Unnormalized aperture-averaged SQM coincidence density on x1 x x2."""
    a1, b1, c1 = _aperture_factors(g, plane1, np.asarray(x1, dtype=float))
    a2, b2, c2 = _aperture_factors(g, plane2, np.asarray(x2, dtype=float))
    phase = np.exp(-1j * g.relative_phase)
    cross = 2.0 * np.real(phase * np.outer(c1, np.conj(c2)))
    density = np.outer(a1, b2) + np.outer(b1, a2) + cross
    return np.clip(density, 0.0, None)


def sqm_joint_pattern(
    g: SlitGeometry,
    plane1: DetectorPlane,
    plane2: DetectorPlane,
) -> JointPattern:
    """Standard quantum mechanics coincidence pattern on plane1.positions x plane2.positions."""
    check_fraunhofer(g, plane1.distance)
    check_fraunhofer(g, plane2.distance)
    x1 = _axis(plane1.positions, "plane 1")
    x2 = _axis(plane2.positions, "plane 2")
    _check_resolution(g, plane1, x1, "plane 1")
    _check_resolution(g, plane2, x2, "plane 2")
    logger.debug("sqm pattern on %d x %d grid", x1.size, x2.size)
    return _normalized(PatternModel.SQM, x1, x2, joint_density(g, plane1, plane2, x1, x2))


def dbb_density(
    g: SlitGeometry,
    plane1: DetectorPlane,
    plane2: DetectorPlane,
    x1: np.ndarray,
    x2: np.ndarray,
) -> np.ndarray:
    """Unnormalized aperture-averaged comparator density on x1 x x2.

    A photon through A stays at x < 0 and one through B at x > 0, so both
    photons on the same side of the axis have zero density.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    a1, b1, _ = _aperture_factors(g, plane1, x1)
    a2, b2, _ = _aperture_factors(g, plane2, x2)
    a_then_b = np.outer(a1 * (x1 < 0.0), b2 * (x2 > 0.0))
    b_then_a = np.outer(b1 * (x1 > 0.0), a2 * (x2 < 0.0))
    return a_then_b + b_then_a


def dbb_joint_pattern(
    g: SlitGeometry,
    plane1: DetectorPlane,
    plane2: DetectorPlane,
) -> JointPattern:
    """Same-semiplane-free comparator pattern on plane1.positions x plane2.positions."""
    check_fraunhofer(g, plane1.distance)
    check_fraunhofer(g, plane2.distance)
    x1 = _axis(plane1.positions, "plane 1")
    x2 = _axis(plane2.positions, "plane 2")
    _check_resolution(g, plane1, x1, "plane 1")
    _check_resolution(g, plane2, x2, "plane 2")
    return _normalized(PatternModel.DBB, x1, x2, dbb_density(g, plane1, plane2, x1, x2))


def incoherent_sum(g: SlitGeometry, plane: DetectorPlane, x: np.ndarray) -> np.ndarray:
    """Aperture-averaged |psi_A|^2 + |psi_B|^2, normalized on x."""
    aa, bb, _ = _aperture_factors(g, plane, np.asarray(x, dtype=float))
    s = aa + bb
    return s / trapezoid(s, x)


def sqm_singles_pattern(
    g: SlitGeometry,
    plane: DetectorPlane,
    partner: DetectorPlane,
    integration_half_width: float,
    steps_per_period: int = 16,
) -> SinglesPattern:
    """Single-detector density on `plane`: the joint pattern integrated over the partner plane.

    The partner coordinate runs over [-integration_half_width, +integration_half_width].
    """
    check_fraunhofer(g, plane.distance)
    check_fraunhofer(g, partner.distance)
    zero = g.envelope_zero(partner.distance)
    if integration_half_width < MIN_ENVELOPE_ZEROS * zero:
        raise GridResolutionError(
            f"singles integration half width {integration_half_width:.3g} m covers fewer than "
            f"{MIN_ENVELOPE_ZEROS} envelope zeros ({zero:.3g} m each) on the partner plane"
        )
    x = _axis(plane.positions, "singles plane")
    _check_resolution(g, plane, x, "singles plane")
    step = g.fringe_period(partner.distance) / max(steps_per_period, MIN_STEPS_PER_PERIOD)
    n = int(np.ceil(2.0 * integration_half_width / step)) + 1
    xp = np.linspace(-integration_half_width, integration_half_width, n)
    density = trapezoid(joint_density(g, plane, partner, x, xp), xp, axis=1)
    density = density / trapezoid(density, x)
    return SinglesPattern(
        x=x,
        density=density,
        incoherent=incoherent_sum(g, plane, x),
        integration_half_width=integration_half_width,
    )


def singles_visibility(pattern: SinglesPattern, region: float | None = None) -> float:
    """Fringe visibility of the singles relative to the smooth incoherent sum.

    Evaluated where |x| <= region, or on the whole grid when region is None.
    """
    x = pattern.x
    mask = np.ones_like(x, dtype=bool) if region is None else np.abs(x) <= region
    ratio = pattern.density[mask] / pattern.incoherent[mask]
    hi, lo = float(ratio.max()), float(ratio.min())
    return (hi - lo) / (hi + lo)


def l1_distance(p: JointPattern, q: JointPattern) -> float:
    """Integral of |p - q| over a shared grid."""
    if p.density.shape != q.density.shape:
        raise GridResolutionError("patterns are on different grids")
    return float(trapezoid(trapezoid(np.abs(p.density - q.density), p.x2, axis=1), p.x1))


def coincidence_profile(
    g: SlitGeometry,
    plane1: DetectorPlane,
    plane2: DetectorPlane,
    fixed_x2: float,
) -> np.ndarray:
    """SQM coincidences along plane1.positions with detector 2 parked at fixed_x2, peak scaled to 1."""
    check_fraunhofer(g, plane1.distance)
    check_fraunhofer(g, plane2.distance)
    x1 = np.asarray(plane1.positions, dtype=float)
    if x1.size == 0:
        raise GridResolutionError("plane 1 has no positions")
    profile = joint_density(g, plane1, plane2, x1, np.array([fixed_x2]))[:, 0]
    peak = float(profile.max())
    if not peak > 0.0:
        raise GridResolutionError("coincidence profile vanishes at every position")
    return profile / peak
