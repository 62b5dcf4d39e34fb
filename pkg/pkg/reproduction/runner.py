"""
BL-8: Reproduction runner.

Recomputes the published figures area by area and records each one as a
FigureCheck next to the quoted value. Figures whose published value rests on
an unstated convention are reported with asserted=False.
"""

from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np

from pkg.bell.ch import ch_strict, f_for_angle
from pkg.bell.loophole import map_row
from pkg.bell.optimizer import ch_optimize, critical_efficiency
from pkg.calibration.montecarlo import estimator_bias_scan
from pkg.doubleslit.diffraction import coincidence_profile, sqm_joint_pattern, sqm_singles_pattern, singles_visibility
from pkg.doubleslit.fitting import chi_square_compare, estimate_period, synthetic_counts
from pkg.errors import BiphotonLabError
from pkg.lhv.casado import exclusion_verdict, solve_T
from pkg.models.bell import ChConfiguration, OptimizerSettings
from pkg.models.config import ExperimentConfig
from pkg.models.lhv import Verdict
from pkg.models.optics import AnalyzerSetting, BiphotonState
from pkg.models.qkd import DoubleEntangledState, EveKind, EveStrategy, InformationMetric
from pkg.models.report import FigureCheck, ReproductionRun, RunStatus
from pkg.montecarlo.rng import RngStream
from pkg.polarization.core import fringe_visibility
from pkg.qkd.eavesdrop import PUBLISHED_RATIOS, disturbance_ratio
from pkg.qkd.protocol import run_protocol, run_single_channel

logger = logging.getLogger(__name__)

AREAS = ("bell", "lhv", "calibration", "double-slit", "qkd")


class ReproductionRunner:
    """Computes every figure check for an experiment configuration."""

    def __init__(self, config: ExperimentConfig, quick: bool = False) -> None:
        self.config = config
        self.quick = quick
        self._areas: dict[str, Callable[[], list[FigureCheck]]] = {
            "bell": self._bell,
            "lhv": self._lhv,
            "calibration": self._calibration,
            "double-slit": self._double_slit,
            "qkd": self._qkd,
        }

    @property
    def settings(self) -> OptimizerSettings:
        if self.quick:
            return self.config.optimizer.model_copy(update={"grid_step": max(self.config.optimizer.grid_step, 5.0)})
        return self.config.optimizer

    def run(self, areas: list[str] | None = None) -> ReproductionRun:
        selected = list(areas) if areas else list(AREAS)
        unknown = [a for a in selected if a not in self._areas]
        if unknown:
            raise BiphotonLabError(f"unknown reproduction areas: {unknown}")

        run = ReproductionRun(
            run_id=self.config.sha256(),
            seed=self.config.seed,
            metadata={"areas": selected, "quick": self.quick},
        )
        errors: list[str] = []
        for area in selected:
            logger.info("reproducing %s figures", area)
            try:
                run.checks.extend(self._areas[area]())
            except BiphotonLabError as e:
                logger.error("%s figures failed: %s", area, e)
                errors.append(f"{area}: {e}")
        run.status = RunStatus.FAILED if errors else RunStatus.COMPLETED
        run.error = "; ".join(errors) or None
        run.compute_summary()
        return run

    # -- bell-analysis ------------------------------------------------------

    def _bell(self) -> list[FigureCheck]:
        s = self.settings
        checks: list[FigureCheck] = []

        best = ch_optimize(BiphotonState.with_f(1.0), settings=s)
        t1, t2, t1p, t2p = best.configuration.angles
        for name, value, published in (
            ("f=1 optimal theta1", t1, 67.5),
            ("f=1 optimal theta2", t2, 45.0),
            ("f=1 optimal theta1'", t1p, 22.5),
            ("f=1 optimal theta2'", t2p, 0.0),
        ):
            checks.append(FigureCheck(name=name, area="bell", computed=value, published=published, tolerance=0.05, unit="deg"))
        checks.append(FigureCheck(
            name="f=1 maximal CH per pair", area="bell", computed=best.result.value,
            published=(math.sqrt(2.0) - 1.0) / 2.0, tolerance=1e-6, note="closed form (sqrt(2) - 1) / 2",
        ))

        low = ch_optimize(BiphotonState.with_f(0.4), settings=s)
        checks.append(FigureCheck(
            name="f=0.4 optimal theta1", area="bell", computed=low.configuration.theta1,
            published=72.24, tolerance=0.05, unit="deg", asserted=False,
            note=f"quoted angle is the optimum for f = {f_for_angle(90.0 - 72.24):.4f}",
        ))
        checks.append(FigureCheck(
            name="f=0.4 optimal theta1'", area="bell", computed=low.configuration.theta1p,
            published=90.0 - 72.24, tolerance=0.05, unit="deg", asserted=False,
        ))

        vis = fringe_visibility(
            BiphotonState.with_f(1.0), AnalyzerSetting(theta=self.config.analyzers.fixed_theta),
            self.config.analyzers.scan_steps, mode=self.config.analyzers.fringe_mode,
        )
        checks.append(FigureCheck(name="f=1 fringe visibility", area="bell", computed=vis, published=1.0, tolerance=1e-9))

        corner = map_row(1.0, [1.0], s)[0]
        checks.append(FigureCheck(
            name="loophole map cell (f=1, eta=1)", area="bell", computed=corner,
            published=(math.sqrt(2.0) - 1.0) / 2.0, tolerance=1e-4,
        ))
        strict_at_published = ch_strict(BiphotonState.with_f(1.0), ChConfiguration(eta1=0.81, eta2=0.81)).value
        checks.append(FigureCheck(
            name="strict CH at eta=0.81, f=1 optimal angles", area="bell", computed=strict_at_published,
            published=None, asserted=False, note="negative: 0.81 is below the f=1 threshold",
        ))

        if not self.quick:
            eta_one = critical_efficiency(1.0, s)
            checks.append(FigureCheck(
                name="critical efficiency f=1", area="bell", computed=eta_one, published=0.81, tolerance=0.005,
                asserted=False, note=f"closed form 2(sqrt(2) - 1) = {2.0 * (math.sqrt(2.0) - 1.0):.4f}",
            ))
            eta_low = critical_efficiency(0.01, s)
            checks.append(FigureCheck(
                name="critical efficiency f=0.01", area="bell", computed=eta_low, published=0.67, tolerance=0.01,
                note="tends to 2/3 as f -> 0",
            ))
        return checks

    # -- lhv-bounds ---------------------------------------------------------

    def _lhv(self) -> list[FigureCheck]:
        c = self.config.casado
        T = solve_T(c.parameters)
        verdict = exclusion_verdict(
            c.parameters, c.observed_visibility, c.ch_positive,
            T_limit=c.T_limit, visibility_threshold=c.visibility_threshold,
        )
        return [
            FigureCheck(
                name="absorption time at observed singles rate", area="lhv", computed=T, unit="s",
                note="quoted as larger than 1 s", asserted=False,
            ),
            FigureCheck(
                name="absorption time above 1 s", area="lhv", computed=float(T > 1.0), published=1.0,
            ),
            FigureCheck(
                name="local-realistic model excluded", area="lhv",
                computed=float(verdict.verdict is Verdict.EXCLUDED), published=1.0, note=verdict.rationale,
            ),
        ]

    # -- detector-calibration ----------------------------------------------

    def _calibration(self) -> list[FigureCheck]:
        c = self.config.calibration
        n_seeds = min(c.n_seeds, 20) if self.quick else c.n_seeds
        scenario = c.scenario.with_seed(self.config.seed)
        row = estimator_bias_scan([scenario], n_seeds)[0]
        return [
            FigureCheck(
                name="calibrated eta1 (seed mean)", area="calibration", computed=row.mean_estimate or 0.0,
                published=scenario.eta1, tolerance=max(3.0 * (row.stderr or 0.0), 1e-3),
            ),
            FigureCheck(
                name="2-sigma coverage of the reported uncertainty", area="calibration",
                computed=row.coverage_2sigma or 0.0, published=0.95, tolerance=0.05,
                asserted=n_seeds >= 100,
            ),
        ]

    # -- double-slit --------------------------------------------------------

    def _double_slit(self) -> list[FigureCheck]:
        d = self.config.double_slit
        g = d.geometry
        period = g.fringe_period(d.plane1.distance)
        step = period / 8.0
        x1 = np.arange(d.x1_range[0], d.x1_range[1] + 0.5 * step, step)
        plane1 = d.plane1.at(x1)
        checks: list[FigureCheck] = []

        qx1, qx2 = d.query
        query = sqm_joint_pattern(g, d.plane1.at([qx1 - step, qx1, qx1 + step]), d.plane2.at([qx2 - step, qx2, qx2 + step]))
        checks.append(FigureCheck(
            name="same-semiplane coincidences predicted", area="double-slit",
            computed=float(query.at(qx1, qx2) > 0.0), published=1.0,
        ))

        fine = np.arange(d.x1_range[0], d.x1_range[1], period / 64.0)
        profile = coincidence_profile(g, d.plane1.at(fine), d.plane2, d.fixed_x2)
        checks.append(FigureCheck(
            name="coincidence fringe period", area="double-slit",
            computed=estimate_period(fine, profile) * 1e3, published=period * 1e3, tolerance=0.02 * period * 1e3,
            unit="mm", note="lambda D1 / s",
        ))

        zeros = 3.5 * g.envelope_zero(d.plane2.distance)
        singles = sqm_singles_pattern(g, plane1, d.plane2, zeros)
        checks.append(FigureCheck(
            name="singles fringe visibility", area="double-slit",
            computed=singles_visibility(singles), published=0.0, tolerance=0.05,
        ))

        scan = d.plane1.at(np.linspace(-d.scan_half_width, d.scan_half_width, d.synthetic_points))
        template = coincidence_profile(g, scan, d.plane2, d.fixed_x2)
        n_seeds = min(d.n_seeds, 20) if self.quick else d.n_seeds
        root = RngStream(self.config.seed, stream_id=5)
        sqm_red, lin_red = [], []
        for k in range(n_seeds):
            data = synthetic_counts(
                g, scan, d.plane2, d.fixed_x2, d.synthetic_peak_counts, root.child(k), d.synthetic_background,
            )
            sqm_red.append(chi_square_compare(data, template, background=True).reduced_chi2)
            lin_red.append(chi_square_compare(data, None, slope=True).reduced_chi2)
        checks.append(FigureCheck(
            name="SQM fit reduced chi2 (median)", area="double-slit",
            computed=float(np.median(sqm_red)), published=0.9, tolerance=0.6,
        ))
        checks.append(FigureCheck(
            name="linear fit chi2 (median)", area="double-slit",
            computed=float(np.median(lin_red)) * (d.synthetic_points - 2), published=12.6, asserted=False,
            note="synthetic peak counts are a configuration choice; only the contrast with the SQM fit is asserted",
        ))
        checks.append(FigureCheck(
            name="linear fit rejected (median reduced chi2 > 3)", area="double-slit",
            computed=float(np.median(lin_red) > 3.0), published=1.0,
        ))
        return checks

    # -- qkd-d4 -------------------------------------------------------------

    def _qkd(self) -> list[FigureCheck]:
        q = self.config.qkd
        n = min(q.rounds, 40_000) if self.quick else q.rounds
        seed = self.config.seed
        state = DoubleEntangledState(phi=q.phi, f_pol=q.f_pol)
        fixed = EveStrategy(kind=EveKind.FIXED_BASIS, intercept_fraction=1.0)
        breid = EveStrategy(kind=EveKind.BREIDBART, intercept_fraction=1.0)

        single_fixed = run_single_channel(n, fixed, seed, f_pol=q.f_pol).report
        single_breid = run_single_channel(n, breid, seed, f_pol=q.f_pol).report
        double_fixed = run_protocol(state, n, eve=fixed, seed=seed).report
        double_breid = run_protocol(state, n, eve=breid, seed=seed).report
        tol = 0.03 if self.quick else 0.02
        checks = [
            FigureCheck(name="single channel I_AE, fixed basis", area="qkd",
                        computed=single_fixed.I_AE_per_bit, published=0.5, tolerance=tol, unit="bit"),
            FigureCheck(name="single channel I_AE, Breidbart", area="qkd",
                        computed=single_breid.I_AE_per_bit, published=0.399, tolerance=tol, unit="bit"),
            FigureCheck(name="double channel full-symbol probability, fixed basis", area="qkd",
                        computed=double_fixed.P_full_symbol, published=0.25, tolerance=tol),
            FigureCheck(name="double channel I_AE per bit, fixed basis", area="qkd",
                        computed=double_fixed.I_AE_per_bit, published=0.25, asserted=False, unit="bit",
                        note="per-bit mutual information reads 0.5; 0.25 is the full-symbol reading"),
            FigureCheck(name="double channel I_AE per bit, Breidbart", area="qkd",
                        computed=double_breid.I_AE_per_bit, published=0.189, asserted=False, unit="bit",
                        note="no simple normalization reproduces the quoted value"),
            FigureCheck(name="single channel QBER, fixed basis", area="qkd",
                        computed=single_fixed.qber, published=0.25, tolerance=tol),
            FigureCheck(name="single channel QBER, Breidbart", area="qkd",
                        computed=single_breid.qber, published=0.25, tolerance=tol),
        ]
        for kind in (EveKind.FIXED_BASIS, EveKind.BREIDBART):
            for metric in InformationMetric:
                r = disturbance_ratio(kind, q.target_information, metric, state=state, n_rounds=n, seed=seed)
                checks.append(FigureCheck(
                    name=f"disturbance ratio, {kind.value}, {metric.value}", area="qkd",
                    computed=r.ratio, published=PUBLISHED_RATIOS[kind], asserted=False,
                    note=f"+- {r.ratio_stderr:.3g}; the invariant ratio > 1 is asserted separately",
                ))
                checks.append(FigureCheck(
                    name=f"double channel more disturbed, {kind.value}, {metric.value}", area="qkd",
                    computed=float(r.ratio > 1.0), published=1.0,
                ))
        return checks
