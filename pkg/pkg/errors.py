"""
BL-0: Error types.

Every failure raised by the library derives from BiphotonLabError so the CLI
can map it to an exit code. Configuration problems exit with 2, everything
else with 1.
"""

from __future__ import annotations


class BiphotonLabError(Exception):
    """Base class for all library errors."""


class ConfigError(BiphotonLabError):
    """Experiment configuration is malformed or inconsistent."""


class DomainError(BiphotonLabError, ValueError):
    """A physical parameter is outside its admissible range."""


class UndefinedVisibilityError(DomainError):
    """Fringe scan with N_max = N_min = 0."""


class ConvergenceError(BiphotonLabError):
    """Optimizer refinement stalled before reaching tolerance."""


class FraunhoferError(DomainError):
    """Far-field propagation is not valid for the requested geometry."""


class GridResolutionError(DomainError):
    """Evaluation grid or integration range cannot resolve the pattern."""


class EstimationError(BiphotonLabError):
    """Calibration estimator has no usable trigger counts."""


class SingularFitError(BiphotonLabError):
    """Least-squares design matrix is rank deficient or under-determined."""


class UnreachableTargetError(BiphotonLabError):
    """Requested eavesdropper information cannot be reached with eta_E <= 1."""
