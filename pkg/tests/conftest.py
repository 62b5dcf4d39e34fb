"""Shared test fixtures for biphoton-lab tests."""

from __future__ import annotations

import numpy as np
import pytest

from pkg.models.bell import OptimizerSettings
from pkg.models.calibration import CalibrationScenario
from pkg.models.config import ExperimentConfig
from pkg.models.lhv import CasadoParameters
from pkg.models.optics import BiphotonState
from pkg.models.slits import DetectorPlane, SlitGeometry


@pytest.fixture
def config():
    """Default experiment config."""
    return ExperimentConfig()


@pytest.fixture
def maximal():
    """(|HH> + |VV>) / sqrt(2)."""
    return BiphotonState.with_f(1.0)


@pytest.fixture
def coarse():
    """Optimizer settings that keep the angle search fast."""
    return OptimizerSettings(grid_step=5.0)


@pytest.fixture
def casado_params():
    """Rate-bound inputs of the reference apparatus at 1e5 singles/s."""
    return CasadoParameters(R_S=1e5)


@pytest.fixture
def scenario():
    """Calibration acquisition with trigger dark counts."""
    return CalibrationScenario(pair_rate=1e5, eta1=0.51, eta2=0.30, dark2=50.0, acquisition=100.0)


@pytest.fixture
def geometry():
    """100 um separation, 10 um slits, 702 nm pairs."""
    return SlitGeometry()


@pytest.fixture
def plane1():
    return DetectorPlane(distance=1.21, aperture=2e-3)


@pytest.fixture
def plane2():
    return DetectorPlane(distance=1.5, aperture=6e-3)


@pytest.fixture
def rng():
    """Independent generator for test inputs (never used by the code under test)."""
    return np.random.default_rng(20260101)
