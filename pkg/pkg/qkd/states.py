"""
BL-6: Two-qubit sectors of the double-entangled state.

The pair carries two independent entanglements. Polarization is the
(|HH> + f|VV>) state; the time-bin sector is (|ss> + e^{i phi}|ll>)/sqrt(2).
Conditioned on both photons leaving their local interferometer in the
central slot, the time-bin sector behaves as a qubit pair measured in the
basis (|s> +- e^{i alpha}|l>)/sqrt(2), so P(x_a, x_b) = (1 + s_a s_b cos(phi - alpha - beta)) / 4.

Tables are indexed [basis_a, basis_b, outcome_a, outcome_b] (and with Eve's
basis/outcome in the middle for intercept-resend).
"""

from __future__ import annotations

import math

import numpy as np

from pkg.models.qkd import (
    DoubleEntangledState,
    MeasurementDistribution,
    ObserverSettings,
    PolBasis,
    PumpPathState,
)

# per-observer probability of a central-slot click with a balanced interferometer
CENTRAL_SLOT = 0.5
_SQ = 1.0 / math.sqrt(2.0)
_C8 = math.cos(math.pi / 8.0)
_S8 = math.sin(math.pi / 8.0)

_POL_VECTORS: dict[PolBasis, np.ndarray] = {
    PolBasis.Z: np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex),
    PolBasis.X: np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    PolBasis.BREIDBART: np.array([[_C8, _S8], [-_S8, _C8]], dtype=complex),
}

# (early, central, late) for each observer; both photons share the emission time
SLOT_JOINT = np.array([
    [0.125, 0.125, 0.0],
    [0.125, 0.25, 0.125],
    [0.0, 0.125, 0.125],
])
SLOT_SINGLE = np.array([0.25, 0.5, 0.25])


def pol_basis(basis: PolBasis) -> np.ndarray:
    """Rows are the outcome-0 and outcome-1 vectors in (|H>, |V>)."""
    return _POL_VECTORS[basis]


def phase_basis(alpha: float) -> np.ndarray:
    """Rows are (|s> + e^{i alpha}|l>)/sqrt(2) and (|s> - e^{i alpha}|l>)/sqrt(2)."""
    e = np.exp(1j * alpha)
    return np.array([[_SQ, _SQ * e], [_SQ, -_SQ * e]], dtype=complex)


def pol_pair(f: complex) -> np.ndarray:
    """(|HH> + f|VV>)/sqrt(1 + |f|^2) as a 4-vector."""
    v = np.array([1.0, 0.0, 0.0, f], dtype=complex)
    return v / np.linalg.norm(v)


def pump_amplitudes(pump: PumpPathState) -> np.ndarray:
    """(short, long) amplitudes of the pump photon."""
    return np.array([_SQ, _SQ * np.exp(1j * pump.phi)], dtype=complex)


def phase_pair(pump: PumpPathState) -> np.ndarray:
    """(|ss> + e^{i phi}|ll>)/sqrt(2) as a 4-vector.

    Both daughter photons are born in the slot the pump photon took.
    """
    short, long_ = pump_amplitudes(pump)
    return np.array([short, 0.0, 0.0, long_], dtype=complex)


def _project(psi: np.ndarray, basis_a: np.ndarray, basis_b: np.ndarray) -> np.ndarray:
    """Amplitudes <a|<b|psi> as a (2, 2) array over outcomes."""
    m = psi.reshape(2, 2)
    return np.conj(basis_a) @ m @ np.conj(basis_b).T


def pair_table(psi: np.ndarray, bases_a: list[np.ndarray], bases_b: list[np.ndarray]) -> np.ndarray:
    """P[ia, ib, a, b] for every combination of listed bases."""
    out = np.empty((len(bases_a), len(bases_b), 2, 2))
    for i, ba in enumerate(bases_a):
        for j, bb in enumerate(bases_b):
            out[i, j] = np.abs(_project(psi, ba, bb)) ** 2
    return out


def intercept_table(
    psi: np.ndarray,
    bases_a: list[np.ndarray],
    bases_e: list[np.ndarray],
    bases_b: list[np.ndarray],
) -> np.ndarray:
    """P[ia, ie, ib, a, e, b] when Eve measures Bob's photon and resends her outcome state."""
    out = np.empty((len(bases_a), len(bases_e), len(bases_b), 2, 2, 2))
    for i, ba in enumerate(bases_a):
        for k, be in enumerate(bases_e):
            p_ae = np.abs(_project(psi, ba, be)) ** 2
            for j, bb in enumerate(bases_b):
                # |<b|e>|^2: Bob's outcome given the resent state
                overlap = np.abs(np.conj(bb) @ be.T) ** 2
                out[i, k, j] = p_ae[:, :, None] * overlap.T[None, :, :]
    return out


def measurement_distribution(
    state: DoubleEntangledState,
    alice: ObserverSettings,
    bob: ObserverSettings,
) -> MeasurementDistribution:
    """Joint (pol_a, pol_b, phase_a, phase_b) probabilities given both central-slot clicks.

    The two sectors factorize; the post-selection probability is the
    both-central weight of the slot distribution.
    """
    pol = pair_table(pol_pair(state.f_pol.value), [pol_basis(alice.pol_basis)], [pol_basis(bob.pol_basis)])[0, 0]
    ph = pair_table(phase_pair(state.pump), [phase_basis(alice.phase_setting)], [phase_basis(bob.phase_setting)])[0, 0]
    joint = np.einsum("ab,xy->abxy", pol, ph)
    return MeasurementDistribution(
        joint=joint.tolist(),
        postselection=float(SLOT_JOINT[1, 1]),
        central_alice=CENTRAL_SLOT,
        central_bob=CENTRAL_SLOT,
    )
