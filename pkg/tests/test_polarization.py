"""Tests for BL-1: Polarization core."""

from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from pkg.errors import DomainError, UndefinedVisibilityError
from pkg.models.optics import AnalyzerSetting, BellState, BiphotonState, FringeMode, Transmittance
from pkg.polarization.core import (
    coincidence_grid,
    coincidence_prob,
    fringe_scan,
    fringe_visibility,
    single_prob,
)


def density_matrix_coincidence(f: complex, a1: AnalyzerSetting, a2: AnalyzerSetting) -> float:
    """Tr[rho E1 (x) E2] built from explicit 4x4 matrices."""
    psi = np.array([1.0, 0.0, 0.0, f], dtype=complex) / math.sqrt(1.0 + abs(f) ** 2)
    rho = np.outer(psi, psi.conj())

    def effect(a: AnalyzerSetting) -> np.ndarray:
        t = math.radians(a.theta)
        axis = np.array([math.sin(t), math.cos(t)])
        return a.eps_perp * np.eye(2) + (a.eps_par - a.eps_perp) * np.outer(axis, axis)

    return float(np.real(np.trace(rho @ np.kron(effect(a1), effect(a2)))))


class TestCoincidence:
    def test_matches_density_matrix(self, rng):
        """Closed form agrees with the explicit trace on 1000 random (f, angles, transmittance) draws."""
        for _ in range(1000):
            f = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
            par1, par2 = rng.uniform(0.5, 1.0, 2)
            a1 = AnalyzerSetting(theta=rng.uniform(0, 180), eps_par=par1, eps_perp=rng.uniform(0, 0.1))
            a2 = AnalyzerSetting(theta=rng.uniform(0, 180), eps_par=par2, eps_perp=rng.uniform(0, 0.1))
            state = BiphotonState.with_f(f)
            assert coincidence_prob(state, a1, a2) == pytest.approx(
                density_matrix_coincidence(f, a1, a2), abs=1e-12
            )

    def test_maximal_state_cos_squared(self, maximal):
        """Ideal analyzers on the maximal state give cos^2(t1 - t2) / 2."""
        for t1, t2 in [(0, 0), (22.5, 0), (45, 0), (90, 0), (67.5, 45), (10, 170)]:
            p = coincidence_prob(maximal, AnalyzerSetting.ideal(t1), AnalyzerSetting.ideal(t2))
            assert p == pytest.approx(0.5 * math.cos(math.radians(t1 - t2)) ** 2, abs=1e-12)

    def test_grid_matches_pointwise(self):
        """Vectorized grid agrees with single evaluations."""
        state = BiphotonState.with_f(0.4 + 0.3j)
        t = Transmittance(eps_par=0.95, eps_perp=0.02)
        angles = np.array([0.0, 30.0, 75.0, 120.0])
        grid = coincidence_grid(state, angles, angles, t, t)
        for i, x in enumerate(angles):
            for j, y in enumerate(angles):
                assert grid[i, j] == pytest.approx(coincidence_prob(state, t.at(x), t.at(y)), abs=1e-12)

    def test_absent_analyzers_pass_everything(self, maximal):
        """No analyzer on either arm gives probability one."""
        absent = AnalyzerSetting.absent()
        assert coincidence_prob(maximal, absent, absent) == pytest.approx(1.0)

    def test_probabilities_in_unit_interval(self, rng):
        """Every coincidence probability lies in [0, 1]."""
        state = BiphotonState.with_f(2.0 - 1.0j)
        t = Transmittance()
        grid = coincidence_grid(state, rng.uniform(0, 180, 30), rng.uniform(0, 180, 30), t, t)
        assert np.all(grid >= 0.0)
        assert np.all(grid <= 1.0)

    def test_bell_states(self):
        """psi- is anticorrelated at equal angles."""
        psi_minus = BiphotonState.bell(BellState.PSI_MINUS)
        for t in (0.0, 30.0, 45.0):
            p = coincidence_prob(psi_minus, AnalyzerSetting.ideal(t), AnalyzerSetting.ideal(t))
            assert p == pytest.approx(0.0, abs=1e-12)


class TestSingles:
    def test_maximal_state_half(self, maximal):
        """Each photon of the maximal state passes an ideal analyzer half the time."""
        for t in (0.0, 17.0, 45.0, 133.0):
            assert single_prob(maximal, AnalyzerSetting.ideal(t), arm=1) == pytest.approx(0.5)
            assert single_prob(maximal, AnalyzerSetting.ideal(t), arm=2) == pytest.approx(0.5)

    def test_product_state(self):
        """|HH> passes an analyzer at theta with probability sin^2(theta)."""
        state = BiphotonState.with_f(0.0)
        assert single_prob(state, AnalyzerSetting.ideal(30.0)) == pytest.approx(0.25)

    def test_needs_analyzer(self, maximal):
        """Singles need an analyzer on the measured arm."""
        with pytest.raises(DomainError):
            single_prob(maximal, AnalyzerSetting.absent())

    def test_invalid_arm(self, maximal):
        with pytest.raises(DomainError):
            single_prob(maximal, AnalyzerSetting.ideal(0.0), arm=3)


class TestAnalyzerModel:
    def test_angle_reduced(self):
        """Angles are kept modulo 180 degrees."""
        assert AnalyzerSetting(theta=200.0).theta == pytest.approx(20.0)
        assert AnalyzerSetting(theta=-10.0).theta == pytest.approx(170.0)

    def test_perp_above_par_rejected(self):
        with pytest.raises(ValidationError):
            AnalyzerSetting(theta=0.0, eps_par=0.5, eps_perp=0.6)

    def test_relabeled_state_same_physics(self):
        """f -> 1/f* describes the same state with H and V exchanged."""
        state = BiphotonState.with_f(0.5 + 0.2j)
        swapped = state.relabeled()
        a1, a2 = AnalyzerSetting.ideal(20.0), AnalyzerSetting.ideal(65.0)
        b1, b2 = AnalyzerSetting.ideal(110.0), AnalyzerSetting.ideal(155.0)
        assert coincidence_prob(state, a1, a2) == pytest.approx(coincidence_prob(swapped, b1, b2), abs=1e-12)

    def test_product_state_not_relabelable(self):
        with pytest.raises(ValueError):
            BiphotonState.with_f(0.0).relabeled()


class TestVisibility:
    def test_ideal_maximal_state(self, maximal):
        """Ideal polarizers and f = 1 give unit visibility."""
        assert fringe_visibility(maximal, AnalyzerSetting.ideal(45.0)) == pytest.approx(1.0, abs=1e-9)

    def test_both_arms_leaky(self, maximal):
        """eps_perp = 0.0101 on both arms gives V close to 0.9604."""
        fixed = AnalyzerSetting(theta=45.0, eps_par=1.0, eps_perp=0.0101)
        v = fringe_visibility(maximal, fixed, movable=Transmittance(eps_par=1.0, eps_perp=0.0101))
        assert v == pytest.approx(0.9604, abs=1e-3)

    def test_one_arm_leaky(self, maximal):
        """Only the movable analyzer leaks: V = (1 - eps) / (1 + eps) = 0.98."""
        v = fringe_visibility(
            maximal, AnalyzerSetting.ideal(45.0), movable=Transmittance(eps_par=1.0, eps_perp=0.0101)
        )
        assert v == pytest.approx(0.98, abs=1e-4)

    def test_product_state_conditional_zero(self):
        """Conditional visibility of a product state vanishes."""
        state = BiphotonState.with_f(0.0)
        assert fringe_visibility(state, AnalyzerSetting.ideal(45.0)) == pytest.approx(0.0, abs=1e-9)

    def test_product_state_raw_full(self):
        """Raw coincidences of a product state still swing from zero."""
        state = BiphotonState.with_f(0.0)
        v = fringe_visibility(state, AnalyzerSetting.ideal(45.0), mode=FringeMode.RAW)
        assert v == pytest.approx(1.0, abs=1e-9)

    def test_blocked_arm_undefined(self, maximal):
        """An opaque fixed analyzer leaves no fringe at all."""
        opaque = AnalyzerSetting(theta=45.0, eps_par=0.0, eps_perp=0.0)
        with pytest.raises(UndefinedVisibilityError):
            fringe_visibility(maximal, opaque, mode=FringeMode.RAW)

    def test_scan_shape(self, maximal):
        scan = fringe_scan(maximal, AnalyzerSetting.ideal(45.0), 36)
        assert len(scan.angles) == len(scan.coincidence) == len(scan.single) == 36
        assert scan.angles[0] == 0.0
        assert scan.angles[-1] < 180.0

    def test_scan_resolution_minimum(self, maximal):
        with pytest.raises(DomainError):
            fringe_scan(maximal, AnalyzerSetting.ideal(45.0), 3)
