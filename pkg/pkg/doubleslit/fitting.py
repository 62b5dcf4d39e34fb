"""
BL-5: Model comparison on coincidence scans.

Counts along one detector are fitted by weighted linear least squares with
either the SQM profile (scale plus optional background) or a straight line
(no interference). Goodness of fit is chi^2 against its degrees of freedom.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.signal import find_peaks
from scipy.stats import chi2 as chi2_dist

from pkg.doubleslit.diffraction import coincidence_profile
from pkg.errors import DomainError, GridResolutionError, SingularFitError
from pkg.models.slits import ChiSquareResult, CountData, DetectorPlane, SlitGeometry
from pkg.montecarlo.rng import RngStream, poisson_array

logger = logging.getLogger(__name__)

MIN_DOF = 2


def synthetic_counts(
    g: SlitGeometry,
    plane1: DetectorPlane,
    plane2: DetectorPlane,
    fixed_x2: float,
    peak_counts: float,
    stream: RngStream,
    background: float = 0.0,
) -> CountData:
    """Poisson counts at plane1.positions drawn from the SQM profile.

    Expected counts are peak_counts * profile + background; uncertainties are
    sqrt(max(counts, 1)).
    """
    if peak_counts <= 0.0 or background < 0.0:
        raise DomainError("peak counts must be positive and background nonnegative")
    positions = np.asarray(plane1.positions, dtype=float)
    expected = peak_counts * coincidence_profile(g, plane1, plane2, fixed_x2) + background
    counts = poisson_array(stream, expected).astype(float)
    return CountData(positions=positions, counts=counts, stderr=np.sqrt(np.maximum(counts, 1.0)))


def chi_square_compare(
    data: CountData,
    model: np.ndarray | None,
    *,
    background: bool = False,
    slope: bool = False,
    name: str | None = None,
) -> ChiSquareResult:
    """Fit scale (and nuisance terms) of `model` to the counts.

    model=None fits a constant; add slope=True for the straight-line
    "no interference" hypothesis. Raises SingularFitError when the design is
    rank deficient or leaves fewer than two degrees of freedom.
    """
    x = data.positions
    columns: list[np.ndarray] = []
    names: list[str] = []
    if model is not None:
        template = np.asarray(model, dtype=float)
        if template.shape != x.shape:
            raise SingularFitError("model template must match the data positions")
        columns.append(template)
        names.append("scale")
    if background or model is None:
        columns.append(np.ones_like(x))
        names.append("background" if model is not None else "offset")
    if slope:
        columns.append(x)
        names.append("slope")

    design = np.column_stack(columns)
    n, p = design.shape
    dof = n - p
    if dof < MIN_DOF:
        raise SingularFitError(f"{n} points leave {dof} degrees of freedom for {p} parameters; need {MIN_DOF}")
    w = 1.0 / data.stderr
    a = design * w[:, None]
    b = data.counts * w
    coef, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < p:
        raise SingularFitError(f"design matrix has rank {rank} < {p}")

    residuals = b - a @ coef
    stat = float(residuals @ residuals)
    label = name or ("sqm" if model is not None else "linear")
    result = ChiSquareResult(
        model=label,
        chi2=stat,
        dof=dof,
        reduced_chi2=stat / dof,
        p_value=float(chi2_dist.sf(stat, dof)),
        parameters={k: float(v) for k, v in zip(names, coef)},
    )
    logger.debug("chi2 %s: %.4g / %d dof (p=%.3g)", label, stat, dof, result.p_value)
    return result


def estimate_period(positions: np.ndarray, values: np.ndarray) -> float:
    """Mean spacing between local maxima of a sampled modulation."""
    x = np.asarray(positions, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("positions and values must be 1-D and aligned")
    peaks, _ = find_peaks(y)
    if peaks.size < 2:
        raise GridResolutionError(f"found {peaks.size} maxima; need at least two to estimate a period")
    return float((x[peaks[-1]] - x[peaks[0]]) / (peaks.size - 1))
