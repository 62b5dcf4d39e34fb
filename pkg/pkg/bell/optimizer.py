"""
BL-2: Angle optimizer for the CH sum.

Two stages. An exhaustive search on a regular grid over all four angles,
made cubic instead of quartic by noting that once (theta1, theta1') are fixed
the theta2 and theta2' terms separate. Then coordinate-wise refinement: a
dense scan of one angle followed by golden-section search inside the best
scan bracket, sweeping until a sweep gains less than value_tol.

Results are reported canonically within the objective's symmetry orbit
(angle negation, exchange of the two arms, common rotation when the state is
rotation invariant): theta2' closest to 0, then theta2 in [0, 90], then
theta1 >= theta1'.
"""

from __future__ import annotations

import cmath
import logging
import math
from typing import Callable

import numpy as np

from pkg.bell.ch import ChObjective, evaluate, restricted_optimum
from pkg.errors import ConvergenceError, DomainError
from pkg.models.bell import ChConfiguration, ChForm, OptimizationResult, OptimizerSettings
from pkg.models.optics import BiphotonState, Transmittance

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

Angles = tuple[float, float, float, float]


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float = 1e-5) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal f on [a, b].

    Returns (x, f(x)) with x inside a final bracket no wider than tol.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)

    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(n - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
    return (c, yc) if yc > yd else (d, yd)


class _ScalarCh:
    """Pure-float CH evaluation for the refinement inner loop."""

    def __init__(self, objective: ChObjective):
        c = np.asarray(objective.state.state_vector(), dtype=complex)
        self.c00, self.c01, self.c10, self.c11 = (complex(z) for z in c)
        self.e1p, self.d1 = objective.t1.eps_perp, objective.t1.eps_par - objective.t1.eps_perp
        self.e2p, self.d2 = objective.t2.eps_perp, objective.t2.eps_par - objective.t2.eps_perp
        self.w, self.k1, self.k2 = objective.w, objective.k1, objective.k2

    def _terms(self, t1: float, t2: float) -> tuple[float, float, float]:
        r1, r2 = math.radians(t1), math.radians(t2)
        as_, ac = math.sin(r1), math.cos(r1)
        bs, bc = math.sin(r2), math.cos(r2)
        x0 = as_ * self.c00 + ac * self.c10
        x1 = as_ * self.c01 + ac * self.c11
        y0 = self.c00 * bs + self.c01 * bc
        y1 = self.c10 * bs + self.c11 * bc
        m1 = abs(x0) ** 2 + abs(x1) ** 2
        m2 = abs(y0) ** 2 + abs(y1) ** 2
        joint = abs(x0 * bs + x1 * bc) ** 2
        return m1, m2, joint

    def coincidence(self, t1: float, t2: float) -> float:
        m1, m2, joint = self._terms(t1, t2)
        return (self.e1p * self.e2p + self.e1p * self.d2 * m2
                + self.d1 * self.e2p * m1 + self.d1 * self.d2 * joint)

    def single1(self, t1: float) -> float:
        m1, _, _ = self._terms(t1, 0.0)
        return self.e1p + self.d1 * m1

    def single2(self, t2: float) -> float:
        _, m2, _ = self._terms(0.0, t2)
        return self.e2p + self.d2 * m2

    def __call__(self, x: Angles | np.ndarray) -> float:
        t1, t2, t1p, t2p = (float(v) for v in x)
        p = self.coincidence
        return (self.w * (p(t1, t2) - p(t1, t2p) + p(t1p, t2) + p(t1p, t2p))
                - self.k1 * self.single1(t1p) - self.k2 * self.single2(t2))


def angle_grid(step: float) -> np.ndarray:
    n = int(round(180.0 / step))
    return np.arange(n) * (180.0 / n)


def grid_search_tables(
    table: np.ndarray,
    m1: np.ndarray,
    m2: np.ndarray,
    w: float,
    grid: np.ndarray,
    chunk: int = 16,
) -> tuple[Angles, float]:
    """Exhaustive maximum of the CH sum on grid^4 from precomputed tables.

    table[i, j] is the coincidence probability at (grid[i], grid[j]); m1, m2
    are the weighted subtracted terms of arm 1 at theta1' and arm 2 at theta2.
    """
    n = grid.size
    best = -math.inf
    best_idx = (0, 0, 0, 0)
    for i0 in range(0, n, chunk):
        rows = table[i0:i0 + chunk]  # theta1 = grid[i]
        # [i, k, j]: w (P[i, j] + P[k, j]) - m2[j]
        jv = w * (rows[:, None, :] + table[None, :, :]) - m2[None, None, :]
        j_arg = jv.argmax(axis=-1)
        j_max = np.take_along_axis(jv, j_arg[..., None], axis=-1)[..., 0]
        # [i, k, l]: w (P[k, l] - P[i, l])
        lv = w * (table[None, :, :] - rows[:, None, :])
        l_arg = lv.argmax(axis=-1)
        l_max = np.take_along_axis(lv, l_arg[..., None], axis=-1)[..., 0]
        total = j_max + l_max - m1[None, :]
        flat = int(np.argmax(total))
        ii, kk = divmod(flat, n)
        if total[ii, kk] > best:
            best = float(total[ii, kk])
            best_idx = (i0 + ii, int(j_arg[ii, kk]), kk, int(l_arg[ii, kk]))
    i, j, k, l = best_idx
    return (float(grid[i]), float(grid[j]), float(grid[k]), float(grid[l])), best


def grid_search(objective: ChObjective, step: float = 1.0) -> tuple[Angles, float]:
    grid = angle_grid(step)
    table, m1, m2 = objective.tables(grid)
    return grid_search_tables(table, m1, m2, objective.w, grid)


def refine(
    objective: ChObjective,
    start: Angles,
    settings: OptimizerSettings,
) -> tuple[Angles, float, int]:
    """Coordinate-wise scan + golden-section ascent from `start`.

    Only improvements are accepted, so the result is never below f(start).
    """
    scalar = _ScalarCh(objective)
    x = np.array(start, dtype=float)
    fx = scalar(x)
    scan = np.arange(0.0, 180.0, settings.scan_step)
    trial = np.empty((scan.size, 4))
    for sweep in range(1, settings.max_sweeps + 1):
        before = fx
        for coord in range(4):
            trial[:] = x
            trial[:, coord] = scan
            vals = objective.values(trial)
            j = int(np.argmax(vals))

            def along(t: float, coord: int = coord) -> float:
                y = x.copy()
                y[coord] = t
                return scalar(y)

            t_best, v_best = golden_section_max(
                along, scan[j] - settings.scan_step, scan[j] + settings.scan_step, settings.angle_tol,
            )
            if v_best > fx:
                x[coord] = t_best % 180.0
                fx = v_best
        gain = fx - before
        logger.debug("refine sweep %d: value=%.15g gain=%.3g", sweep, fx, gain)
        if gain <= settings.value_tol:
            return (float(x[0]), float(x[1]), float(x[2]), float(x[3])), fx, sweep
    raise ConvergenceError(
        f"CH refinement still improving after {settings.max_sweeps} sweeps (value {fx:.12g})"
    )


def _dist0(theta: float) -> float:
    t = theta % 180.0
    return min(t, 180.0 - t)


def _orbit(x: Angles) -> list[Angles]:
    t1, t2, t1p, t2p = x
    base = [x, (t2p, t1p, t2, t1)]  # identity, arm exchange
    out: list[Angles] = []
    for a in base:
        for sign in (1.0, -1.0):
            b = tuple((sign * v) % 180.0 for v in a)
            out.append(b)  # type: ignore[arg-type]
            shift = b[3]
            out.append(tuple((v - shift) % 180.0 for v in b))  # type: ignore[arg-type]
    return out


def canonical_angles(scalar: Callable[[Angles], float], x: Angles, value: float, tol: float = 1e-9) -> Angles:
    """Pick the canonical representative among the images of x with the same value."""
    candidates = [c for c in _orbit(x) if abs(scalar(c) - value) <= tol * max(1.0, abs(value))]
    if not candidates:
        return tuple(v % 180.0 for v in x)  # type: ignore[return-value]

    def key(c: Angles) -> tuple:
        return (round(_dist0(c[3]), 6), c[1] > 90.0, c[0] < c[2], tuple(round(v, 9) for v in c))

    best = min(candidates, key=key)
    # report theta2' = 0 rather than 179.99999
    return tuple(0.0 if abs(v - 180.0) < 1e-9 else v for v in best)  # type: ignore[return-value]


def ch_optimize(
    state: BiphotonState,
    efficiencies: tuple[float, float] = (1.0, 1.0),
    analyzer_imperfections: tuple[Transmittance, Transmittance] | None = None,
    form: ChForm = ChForm.SUBSTITUTED,
    settings: OptimizerSettings | None = None,
) -> OptimizationResult:
    """Maximize CH over the four analyzer angles."""
    if not isinstance(form, ChForm):
        raise DomainError(f"unknown CH form {form!r}")
    settings = settings or OptimizerSettings()
    t1, t2 = analyzer_imperfections or (Transmittance(), Transmittance())
    eta1, eta2 = efficiencies
    objective = ChObjective(state, t1, t2, eta1, eta2, form)
    scalar = _ScalarCh(objective)

    start, grid_value = grid_search(objective, settings.grid_step)
    logger.info("grid search (step %.3g deg): best %.9g at %s", settings.grid_step, grid_value, start)

    # the restricted family is only a warm start candidate
    f = state.f_value
    if abs(f.imag) < 1e-15 and 0.0 <= f.real <= 1.0 and not state.swap_arm2:
        warm = restricted_optimum(f.real).angles
        if scalar(warm) > grid_value:
            start = warm

    angles, value, sweeps = refine(objective, start, settings)
    angles = canonical_angles(scalar, angles, value)
    config = ChConfiguration(
        analyzer1=t1, analyzer2=t2, eta1=eta1, eta2=eta2,
    ).with_angles(angles)
    result = evaluate(state, config, form)
    logger.info("ch_optimize: %s -> %.12g after %d sweeps", angles, result.value, sweeps)
    return OptimizationResult(configuration=config, result=result, grid_value=grid_value, sweeps=sweeps)


def max_ch(
    state: BiphotonState,
    eta: float,
    form: ChForm = ChForm.STRICT,
    settings: OptimizerSettings | None = None,
) -> float:
    """Maximized CH per pair at equal efficiency on both arms, ideal polarizers."""
    return ch_optimize(state, (eta, eta), None, form, settings).result.value


def critical_efficiency(
    f: complex | float,
    settings: OptimizerSettings | None = None,
    tol: float = 1e-4,
) -> float:
    """Smallest eta (both arms) at which the maximized strict CH becomes positive."""
    if not 0.0 < abs(f) <= 1.0:
        raise DomainError(f"critical efficiency needs 0 < |f| <= 1, got |f| = {abs(f)}")
    if abs(cmath.phase(complex(f))) > 1e-12:
        logger.warning("critical_efficiency: complex f=%s, using the state as given", f)
    state = BiphotonState.with_f(f)
    lo, hi = 0.5, 1.0
    while max_ch(state, lo, settings=settings) > 0.0:
        lo *= 0.5
        if lo < 1e-3:
            return 0.0
    if max_ch(state, hi, settings=settings) <= 0.0:
        raise DomainError(f"no violation even at unit efficiency for f={f}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if max_ch(state, mid, settings=settings) > 0.0:
            hi = mid
        else:
            lo = mid
        logger.debug("critical_efficiency bracket [%.6f, %.6f]", lo, hi)
    return 0.5 * (lo + hi)
