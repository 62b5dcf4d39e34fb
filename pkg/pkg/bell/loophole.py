"""
BL-2: Detection-loophole map.

Each cell holds the strict CH per pair maximized over the analyzer angles
with ideal polarizers and equal efficiency on both arms. Rows share their
coincidence tables, so only the weights change along eta.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from pkg.bell.ch import ChObjective
from pkg.bell.optimizer import angle_grid, grid_search_tables, refine
from pkg.errors import DomainError
from pkg.models.bell import DEFAULT_CONTOUR_LEVELS, ChForm, LoopholeMap, OptimizerSettings
from pkg.models.optics import BiphotonState

logger = logging.getLogger(__name__)


def _check_axis(name: str, axis: list[float]) -> None:
    if not axis:
        raise DomainError(f"{name} grid is empty")
    arr = np.asarray(axis, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} grid must be finite")
    if np.any(np.diff(arr) <= 0.0):
        raise DomainError(f"{name} grid must be strictly increasing")


def map_row(f: float, eta_axis: list[float], settings: OptimizerSettings) -> list[float]:
    """Maximized strict CH/N for one f across the eta axis."""
    state = BiphotonState.with_f(f)
    grid = angle_grid(settings.grid_step)
    unit = ChObjective(state, eta1=1.0, eta2=1.0, form=ChForm.STRICT)
    table, s1, s2 = unit.tables(grid)
    row: list[float] = []
    for eta in eta_axis:
        start, grid_value = grid_search_tables(table, eta * s1, eta * s2, eta * eta, grid)
        objective = ChObjective(state, eta1=eta, eta2=eta, form=ChForm.STRICT)
        _, value, _ = refine(objective, start, settings)
        row.append(max(value, grid_value))
    logger.debug("loophole row f=%.4g done", f)
    return row


def loophole_map(
    f_grid: list[float],
    eta_grid: list[float],
    settings: OptimizerSettings | None = None,
    contour_levels: list[float] | None = None,
    workers: int = 1,
) -> LoopholeMap:
    """CH/N on the (f, eta) grid; rows are evaluated in parallel when workers > 1.

    Assembly order is always the grid order.
    """
    _check_axis("f", f_grid)
    _check_axis("eta", eta_grid)
    if any(not 0.0 <= e <= 1.0 for e in eta_grid):
        raise DomainError("efficiencies must lie in [0, 1]")
    settings = settings or OptimizerSettings()
    f_axis = [float(f) for f in f_grid]
    eta_axis = [float(e) for e in eta_grid]
    logger.info("loophole map: %d x %d cells, angle step %.3g deg", len(f_axis), len(eta_axis), settings.grid_step)

    if workers > 1 and len(f_axis) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(map_row, f_axis, [eta_axis] * len(f_axis), [settings] * len(f_axis)))
    else:
        rows = [map_row(f, eta_axis, settings) for f in f_axis]

    return LoopholeMap(
        f_axis=f_axis,
        eta_axis=eta_axis,
        ch_over_n=rows,
        contour_levels=list(contour_levels if contour_levels is not None else DEFAULT_CONTOUR_LEVELS),
    )
