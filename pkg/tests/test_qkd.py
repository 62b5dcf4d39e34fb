"""Tests for BL-6: d=4 key distribution."""

from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import chi2, chi2_contingency, norm

from pkg.errors import DomainError, UnreachableTargetError
from pkg.models.qkd import (
    Arm,
    DetectionEvent,
    Dof,
    DoubleEntangledState,
    EveKind,
    EveStrategy,
    InformationMetric,
    ObserverSettings,
    PolBasis,
    PumpPathState,
    TimeSlot,
)
from pkg.qkd.eavesdrop import disturbance_ratio
from pkg.qkd.protocol import eve_sweep, run_protocol, run_single_channel, single_channel_baseline
from pkg.qkd.states import measurement_distribution, phase_basis, phase_pair, pol_basis

BREIDBART_MARGIN = math.cos(math.pi / 4.0)  # cos^2(pi/8) - sin^2(pi/8)
BREIDBART_INFO = 1.0 - (
    -(math.cos(math.pi / 8) ** 2) * math.log2(math.cos(math.pi / 8) ** 2)
    - (math.sin(math.pi / 8) ** 2) * math.log2(math.sin(math.pi / 8) ** 2)
)
# two-sided tail probability of a 5 sigma deviation
FIVE_SIGMA = 2.0 * norm.sf(5.0)


@pytest.fixture
def state():
    return DoubleEntangledState()


@pytest.fixture
def fixed_basis():
    return EveStrategy(kind=EveKind.FIXED_BASIS, intercept_fraction=1.0)


@pytest.fixture
def breidbart():
    return EveStrategy(kind=EveKind.BREIDBART, intercept_fraction=1.0)


class TestStates:
    @pytest.mark.parametrize("basis", list(PolBasis))
    def test_pol_bases_orthonormal(self, basis):
        b = pol_basis(basis)
        assert np.allclose(b @ b.conj().T, np.eye(2))

    def test_phase_basis_orthonormal(self):
        b = phase_basis(0.7)
        assert np.allclose(b @ b.conj().T, np.eye(2))

    def test_distribution_normalized(self, state):
        d = measurement_distribution(state, ObserverSettings(), ObserverSettings(pol_basis=PolBasis.X))
        assert sum(d.prob(a, b, x, y) for a in (0, 1) for b in (0, 1) for x in (0, 1) for y in (0, 1)) == pytest.approx(1.0)
        assert d.postselection == pytest.approx(0.25)
        assert d.central_alice == d.central_bob == pytest.approx(0.5)

    def test_matched_settings_correlated(self, state):
        """Equal bases and complementary phases give identical outcomes."""
        alice = ObserverSettings(pol_basis=PolBasis.X, phase_setting=math.pi / 2)
        bob = ObserverSettings(pol_basis=PolBasis.X, phase_setting=-math.pi / 2)
        d = measurement_distribution(state, alice, bob)
        pol = np.array(d.pol_marginal())
        phase = np.array(d.phase_marginal())
        assert np.allclose(pol, np.diag([0.5, 0.5]))
        assert np.allclose(phase, np.diag([0.5, 0.5]))

    def test_mismatched_pol_uncorrelated(self, state):
        d = measurement_distribution(state, ObserverSettings(), ObserverSettings(pol_basis=PolBasis.X))
        assert np.allclose(d.pol_marginal(), 0.25)

    def test_phase_only_in_central_slot(self):
        with pytest.raises(ValidationError):
            DetectionEvent(arm=Arm.ALICE, time_slot=TimeSlot.EARLY, pol_outcome=0, phase_outcome=1)

    def test_phase_reduced(self):
        assert DoubleEntangledState(phi=3 * math.pi).phi == pytest.approx(math.pi)

    def test_time_bin_pair_follows_pump(self):
        """The pair inherits the pump's short/long amplitudes and relative phase."""
        state = DoubleEntangledState(phi=0.5 * math.pi)
        assert state.pump == PumpPathState(phi=0.5 * math.pi)
        psi = phase_pair(state.pump)
        assert np.allclose(psi, np.array([1.0, 0.0, 0.0, 1j]) / math.sqrt(2.0))

    def test_pump_phase_shifts_fringe(self):
        """Rotating the pump phase by pi flips the phase correlation."""
        alice = ObserverSettings(phase_setting=0.0)
        bob = ObserverSettings(phase_setting=0.0)
        same = measurement_distribution(DoubleEntangledState(phi=0.0), alice, bob).phase_marginal()
        flipped = measurement_distribution(DoubleEntangledState(phi=math.pi), alice, bob).phase_marginal()
        assert np.allclose(same, np.diag([0.5, 0.5]))
        assert np.allclose(flipped, [[0.0, 0.5], [0.5, 0.0]])


class TestProtocolNoEve:
    def test_keys_agree(self, state):
        run = run_protocol(state, 100_000, seed=1)
        assert run.alice_key == run.bob_key
        assert run.report.qber == 0.0
        assert run.report.symbol_error_rate == 0.0

    def test_postselection_and_sifting(self, state):
        """A quarter of rounds are both-central and a quarter of those sift."""
        r = run_protocol(state, 100_000, seed=2).report
        assert r.n_postselected / r.n_rounds == pytest.approx(0.25, abs=0.01)
        assert r.sifted_rate == pytest.approx(0.25, abs=0.01)
        assert r.n_sifted == len(run_protocol(state, 100_000, seed=2).alice_key)

    def test_symbols_uniform(self, state):
        key = np.array(run_protocol(state, 100_000, seed=3).alice_key)
        freq = np.bincount(key, minlength=4) / key.size
        assert freq == pytest.approx([0.25] * 4, abs=0.02)

    def test_no_eve_information(self, state):
        r = run_protocol(state, 100_000, seed=4).report
        assert r.P_full_symbol == pytest.approx(0.0, abs=1e-9)
        assert r.I_AE_mutual == pytest.approx(0.0, abs=0.01)

    def test_deterministic(self, state):
        a = run_protocol(state, 60_000, seed=9)
        b = run_protocol(state, 60_000, seed=9)
        assert a.alice_key == b.alice_key
        assert a.report == b.report

    def test_transcript(self, state):
        run = run_protocol(state, 2_000, seed=5, transcript=True)
        assert len(run.transcript) == 2_000
        assert [r.round for r in run.transcript] == list(range(2_000))
        sifted = [r for r in run.transcript if r.sifted]
        assert len(sifted) == run.report.n_sifted
        assert all(r.alice_slot == r.bob_slot == "central" for r in sifted)
        assert all(r.alice_pol_basis == r.bob_pol_basis for r in sifted)
        assert all(not r.eve_intercepted for r in run.transcript)

    def test_no_transcript_by_default(self, state):
        assert run_protocol(state, 1_000, seed=5).transcript is None

    def test_single_channel_sifts_half(self):
        r = single_channel_baseline(100_000, seed=6)
        assert r.sifted_rate == pytest.approx(0.5, abs=0.01)
        assert r.qber == 0.0
        assert r.bits_per_symbol == 1

    def test_needs_rounds(self, state):
        with pytest.raises(DomainError):
            run_protocol(state, 0)


class TestProtocolWithEve:
    def test_fixed_basis_errors(self, state, fixed_basis):
        """Full interception: a quarter of bits wrong, 7/16 of symbols."""
        r = run_protocol(state, 400_000, eve=fixed_basis, seed=11).report
        assert r.qber == pytest.approx(0.25, abs=0.015)
        assert r.symbol_error_rate == pytest.approx(0.4375, abs=0.02)
        assert r.I_AE_per_bit == pytest.approx(0.5, abs=0.03)
        assert r.P_full_symbol == pytest.approx(0.25, abs=0.015)

    def test_breidbart_errors(self, state, breidbart):
        r = run_protocol(state, 400_000, eve=breidbart, seed=12).report
        assert r.qber == pytest.approx(0.25, abs=0.015)
        assert r.symbol_error_rate == pytest.approx(0.4375, abs=0.02)
        assert r.I_AE_per_bit == pytest.approx(BREIDBART_INFO, abs=0.03)
        assert r.P_full_symbol == pytest.approx(0.604, abs=0.015)

    def test_single_channel_fixed_basis(self, fixed_basis):
        r = run_single_channel(400_000, fixed_basis, seed=13).report
        assert r.qber == pytest.approx(0.25, abs=0.01)
        assert r.I_AE_per_bit == pytest.approx(0.5, abs=0.02)
        assert r.P_full_symbol == pytest.approx(0.5, abs=0.01)

    def test_single_channel_breidbart(self, breidbart):
        r = run_single_channel(400_000, breidbart, seed=14).report
        assert r.qber == pytest.approx(0.25, abs=0.01)
        assert r.I_AE_per_bit == pytest.approx(BREIDBART_INFO, abs=0.02)
        assert r.P_full_symbol == pytest.approx(BREIDBART_MARGIN, abs=0.01)

    def test_phase_attack_leaves_polarization(self, state):
        eve = EveStrategy(kind=EveKind.FIXED_BASIS, intercept_fraction=1.0, which_dofs=Dof.PHASE)
        r = run_protocol(state, 200_000, eve=eve, seed=15).report
        assert r.qber_pol == 0.0
        assert r.qber_phase == pytest.approx(0.25, abs=0.02)

    def test_single_channel_ignores_dof_choice(self):
        """The polarization-only channel is attacked on polarization regardless."""
        eve = EveStrategy(kind=EveKind.FIXED_BASIS, intercept_fraction=1.0, which_dofs=Dof.PHASE)
        assert run_single_channel(200_000, eve, seed=16).report.qber == pytest.approx(0.25, abs=0.01)

    def test_errors_grow_with_interception(self, state):
        reports = eve_sweep(state, [0.0, 0.5, 1.0], EveStrategy(kind=EveKind.FIXED_BASIS), 200_000, seed=17, single=True)
        qbers = [r.qber for r in reports]
        assert qbers[0] == 0.0
        assert qbers[1] == pytest.approx(0.125, abs=0.01)
        assert qbers[2] == pytest.approx(0.25, abs=0.01)
        assert [r.intercept_fraction for r in reports] == [0.0, 0.5, 1.0]

    def test_sweep_needs_fractions(self, state):
        with pytest.raises(DomainError):
            eve_sweep(state, [], EveStrategy(kind=EveKind.FIXED_BASIS), 1_000)


class TestDisturbanceRatio:
    @pytest.mark.slow
    def test_fixed_basis_full_symbol(self, state):
        """Matching Eve's symbol knowledge, the double channel shows 3.5x the errors."""
        r = disturbance_ratio(EveKind.FIXED_BASIS, 0.1, InformationMetric.FULL_SYMBOL, state=state, n_rounds=400_000)
        assert r.ratio == pytest.approx(3.5, abs=0.25)
        assert r.ratio > 1.0
        assert r.published_ratio == 3.0
        assert r.eta_double == pytest.approx(0.4, abs=0.03)
        assert r.eta_single == pytest.approx(0.2, abs=0.01)

    @pytest.mark.slow
    def test_breidbart_full_symbol(self, state):
        r = disturbance_ratio(EveKind.BREIDBART, 0.1, InformationMetric.FULL_SYMBOL, state=state, n_rounds=400_000)
        assert r.ratio == pytest.approx(2.05, abs=0.15)
        assert r.published_ratio == pytest.approx(19 / 6)

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", [EveKind.FIXED_BASIS, EveKind.BREIDBART])
    def test_mutual_information(self, state, kind):
        """Per-bit information is equal in both channels, so the ratio is 0.4375 / 0.25."""
        r = disturbance_ratio(kind, 0.1, InformationMetric.MUTUAL_INFORMATION, state=state, n_rounds=400_000)
        assert r.ratio == pytest.approx(1.75, abs=0.2)

    def test_confirmation_runs(self, state):
        r = disturbance_ratio(
            EveKind.FIXED_BASIS, 0.1, state=state, n_rounds=100_000, confirm=True,
        )
        assert r.confirmed_information_double == pytest.approx(0.1, abs=0.02)
        assert r.confirmed_information_single == pytest.approx(0.1, abs=0.02)

    def test_unreachable_target(self, state):
        with pytest.raises(UnreachableTargetError):
            disturbance_ratio(EveKind.FIXED_BASIS, 0.9, state=state, n_rounds=50_000)

    def test_needs_eavesdropper(self, state):
        with pytest.raises(DomainError):
            disturbance_ratio(EveKind.NONE, 0.1, state=state)

    def test_positive_target(self, state):
        with pytest.raises(DomainError):
            disturbance_ratio(EveKind.FIXED_BASIS, 0.0, state=state)


@pytest.fixture(scope="module")
def no_eve_rounds():
    """Transcript of an undisturbed double-entangled run."""
    return run_protocol(DoubleEntangledState(), 100_000, seed=21, transcript=True).transcript


def _table(pairs: list[tuple[int, int]], shape: tuple[int, int]) -> np.ndarray:
    out = np.zeros(shape, dtype=np.int64)
    for i, j in pairs:
        out[i, j] += 1
    return out


class TestInvariants:
    @pytest.mark.parametrize("alice_basis", [PolBasis.Z, PolBasis.X])
    @pytest.mark.parametrize("bob_basis", [PolBasis.Z, PolBasis.X, PolBasis.BREIDBART])
    @pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (0.5 * math.pi, -0.3), (1.2, 2.9)])
    def test_distribution_factorizes(self, alice_basis, bob_basis, alpha, beta):
        """The joint is the product of the polarization and phase marginals."""
        state = DoubleEntangledState(phi=1.1, f_pol=0.6)
        d = measurement_distribution(
            state,
            ObserverSettings(pol_basis=alice_basis, phase_setting=alpha),
            ObserverSettings(pol_basis=bob_basis, phase_setting=beta),
        )
        product = np.einsum("ab,xy->abxy", np.array(d.pol_marginal()), np.array(d.phase_marginal()))
        assert np.allclose(np.array(d.joint), product, atol=1e-12)

    def test_alice_marginal_ignores_bob_settings(self):
        state = DoubleEntangledState(phi=0.4, f_pol=0.7)
        alice = ObserverSettings(pol_basis=PolBasis.X, phase_setting=0.9)
        marginals = []
        for basis in PolBasis:
            for beta in (0.0, 1.0, 2.5):
                joint = np.array(measurement_distribution(state, alice, ObserverSettings(pol_basis=basis, phase_setting=beta)).joint)
                marginals.append(joint.sum(axis=(1, 3)).ravel())
        assert np.allclose(marginals, marginals[0], atol=1e-12)

    def test_sampled_sectors_independent(self, no_eve_rounds):
        """Post-selected polarization outcomes carry no information on phase outcomes."""
        central = [r for r in no_eve_rounds if r.alice_slot == r.bob_slot == "central"]
        assert len(central) > 20_000
        table = _table(
            [(2 * r.alice_pol + r.bob_pol, 2 * r.alice_phase + r.bob_phase) for r in central],
            (4, 4),
        )
        stat, _, dof, _ = chi2_contingency(table)
        assert stat < chi2.isf(FIVE_SIGMA, dof)

    def test_no_signaling(self, no_eve_rounds):
        """Alice's outcome frequencies do not depend on Bob's basis or phase setting."""
        settings: dict[tuple[str, int], int] = {}
        pairs = []
        for r in no_eve_rounds:
            if r.alice_slot != "central":
                continue
            k = settings.setdefault((r.bob_pol_basis, r.bob_phase_index), len(settings))
            pairs.append((k, 2 * r.alice_pol + r.alice_phase))
        assert len(settings) == 4
        table = _table(pairs, (len(settings), 4))
        stat, _, dof, _ = chi2_contingency(table)
        assert dof == 9
        assert stat < chi2.isf(FIVE_SIGMA, dof)
