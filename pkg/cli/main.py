"""
BL-11: Command line.

One experiment configuration (JSON) drives every command; flags override
single keys. Units: meters, seconds, degrees for analyzer angles, radians for
interferometer phases. CSV goes to --output or stdout, summaries to stderr.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import functools
import logging
import sys
from typing import Any, Callable, Sequence

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from pkg.bell.ch import ch_counts, evaluate
from pkg.bell.loophole import loophole_map
from pkg.bell.optimizer import ch_optimize
from pkg.calibration.montecarlo import estimator_bias_scan
from pkg.comparison.detector import DiscrepancyDetector
from pkg.doubleslit.diffraction import (
    coincidence_profile,
    dbb_density,
    dbb_joint_pattern,
    joint_density,
    sqm_joint_pattern,
)
from pkg.doubleslit.fitting import chi_square_compare, synthetic_counts
from pkg.errors import BiphotonLabError, ConfigError
from pkg.io.csvout import (
    marginal_rows,
    metadata_lines,
    pattern_rows,
    read_count_csv,
    render_csv,
    write_csv,
    write_jsonl,
)
from pkg.lhv.casado import exclusion_verdict
from pkg.models.bell import ChConfiguration, ChForm, RateModel
from pkg.models.config import ExperimentConfig
from pkg.models.optics import AnalyzerSetting, BiphotonState, FringeMode
from pkg.models.qkd import DoubleEntangledState, EveKind, InformationMetric
from pkg.montecarlo.rng import RngStream
from pkg.polarization.core import fringe_scan, fringe_visibility
from pkg.qkd.eavesdrop import disturbance_ratio
from pkg.qkd.protocol import eve_sweep, run_protocol, run_single_channel
from pkg.reports.generator import ReportGenerator
from pkg.reproduction.runner import AREAS, ReproductionRunner

console = Console(stderr=True)
logger = logging.getLogger("biphoton_lab")

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_time=False, show_path=False)],
        force=True,
    )


def _handled(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Map library errors onto exit codes."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ValidationError) as e:
            console.print(f"[red]configuration error: {e}[/]")
            sys.exit(EXIT_CONFIG)
        except BiphotonLabError as e:
            console.print(f"[red]{type(e).__name__}: {e}[/]")
            sys.exit(EXIT_RUNTIME)

    return wrapper


def _config(ctx: click.Context, **overrides: Any) -> ExperimentConfig:
    cfg: ExperimentConfig = ctx.obj["config"]
    return cfg.override(**overrides) if any(v is not None for v in overrides.values()) else cfg


def _emit(
    ctx: click.Context,
    cfg: ExperimentConfig,
    output: str | None,
    header: Sequence[str],
    rows: Any,
    **extra: Any,
) -> None:
    meta = metadata_lines(ctx.command_path.partition(" ")[2], cfg.seed, cfg.sha256(), **extra)
    if output:
        write_csv(output, header, rows, meta)
        console.print(f"[green]wrote {output}[/]")
    else:
        click.echo(render_csv(header, rows, meta), nl=False)


def _state(cfg: ExperimentConfig) -> BiphotonState:
    return BiphotonState.with_f(cfg.source.f_complex)


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="Experiment config (JSON)")
@click.option("--seed", type=int, default=None, help="Override the config seed")
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logging")
@click.pass_context
@_handled
def cli(ctx: click.Context, config_path: str | None, seed: int | None, verbose: int) -> None:
    """biphoton-lab: entangled-photon experiments at desk scale."""
    _setup_logging(verbose)
    cfg = ExperimentConfig.from_file(config_path)
    if seed is not None:
        cfg = cfg.override(seed=seed)
    ctx.ensure_object(dict)
    ctx.obj["config"] = cfg


# -- bell-analysis ------------------------------------------------------------


@cli.command("ch-scan")
@click.option("--f", "f", type=float, default=None, help="Entanglement parameter (real part)")
@click.option("--fixed-theta", type=float, default=None, help="Arm-1 analyzer angle, degrees from vertical")
@click.option("--steps", type=int, default=None, help="Scan points over 180 degrees")
@click.option("--mode", type=click.Choice([m.value for m in FringeMode]), default=None)
@click.option("--output", "-o", default=None, help="CSV path (default stdout)")
@click.pass_context
@_handled
def ch_scan(ctx, f, fixed_theta, steps, mode, output):
    """Coincidence fringe while rotating the arm-2 analyzer."""
    cfg = _config(ctx, **{
        "source.f": f, "analyzers.fixed_theta": fixed_theta,
        "analyzers.scan_steps": steps, "analyzers.fringe_mode": mode,
    })
    a = cfg.analyzers
    fixed = AnalyzerSetting(theta=a.fixed_theta, eps_par=a.arm1.eps_par, eps_perp=a.arm1.eps_perp)
    state = _state(cfg)
    scan = fringe_scan(state, fixed, a.scan_steps, movable=a.arm2)
    coinc = np.asarray(scan.coincidence)
    single = np.asarray(scan.single)
    conditional = np.divide(coinc, single, out=np.zeros_like(coinc), where=single > 1e-15)
    vis = fringe_visibility(state, fixed, a.scan_steps, movable=a.arm2, mode=a.fringe_mode)
    console.print(f"visibility ({a.fringe_mode.value}) = {vis:.6f}")
    _emit(
        ctx, cfg, output, ("angle_deg", "coincidence", "single", "conditional"),
        zip(scan.angles, coinc, single, conditional),
        f=cfg.source.f, fixed_theta=a.fixed_theta, visibility=vis, mode=a.fringe_mode,
    )


@cli.command("ch-optimize")
@click.option("--f", "f", type=float, default=None, help="Entanglement parameter (real part)")
@click.option("--eta1", type=float, default=None)
@click.option("--eta2", type=float, default=None)
@click.option("--form", type=click.Choice([c.value for c in ChForm]), default=ChForm.SUBSTITUTED.value)
@click.option("--output", "-o", default=None, help="CSV path (default stdout)")
@click.pass_context
@_handled
def ch_optimize_cmd(ctx, f, eta1, eta2, form, output):
    """Analyzer angles of the largest CH violation."""
    cfg = _config(ctx, **{"source.f": f, "efficiencies.eta1": eta1, "efficiencies.eta2": eta2})
    e = cfg.efficiencies
    state = _state(cfg)
    result = ch_optimize(
        state, (e.eta1, e.eta2), (cfg.analyzers.arm1, cfg.analyzers.arm2), ChForm(form), cfg.optimizer,
    )
    t1, t2, t1p, t2p = result.configuration.angles
    value = result.result.value
    violates = value > 1e-12
    src = cfg.source
    rate = ch_counts(state, result.configuration, RateModel(
        pair_rate=src.pair_rate, background_rate=src.background_rate, acquisition=src.acquisition,
    )) if src.pair_rate > 0.0 and src.acquisition > 0.0 else None

    table = Table(title=f"CH optimum, f={state.f_value:.6g}")
    for col in ("theta1", "theta2", "theta1'", "theta2'", "CH/N"):
        table.add_column(col, justify="right")
    table.add_row(*(f"{v:.4f}" for v in (t1, t2, t1p, t2p)), f"{value:.6g}")
    console.print(table)
    console.print("[green]violation[/]" if violates else "[yellow]no violation[/]")

    _emit(
        ctx, cfg, output,
        ("theta1", "theta2", "theta1p", "theta2p", "ch_over_n", "form", "violation", "ch_rate", "ch_rate_stderr"),
        [(t1, t2, t1p, t2p, value, form, violates,
          rate.value if rate else None, rate.stderr if rate else None)],
        f=cfg.source.f, eta1=e.eta1, eta2=e.eta2,
    )


@cli.command("ch-evaluate")
@click.option("--form", type=click.Choice([c.value for c in ChForm]), default=ChForm.SUBSTITUTED.value)
@click.option("--output", "-o", default=None, help="CSV path (default stdout)")
@click.pass_context
@_handled
def ch_evaluate(ctx, form, output):
    """CH terms at the configured angles."""
    cfg = _config(ctx)
    a, e = cfg.analyzers, cfg.efficiencies
    config = ChConfiguration(
        theta1=a.theta1, theta2=a.theta2, theta1p=a.theta1p, theta2p=a.theta2p,
        analyzer1=a.arm1, analyzer2=a.arm2, eta1=e.eta1, eta2=e.eta2,
    )
    result = evaluate(_state(cfg), config, ChForm(form))
    console.print(f"CH/N ({form}) = {result.value:.9g}")
    names = ("N(t1,t2)", "N(t1,t2')", "N(t1',t2)", "N(t1',t2')", "N(t1',-)", "N(-,t2)")
    _emit(ctx, cfg, output, ("term", "value"), [*zip(names, result.terms), ("CH", result.value)], form=form)


@cli.command("loophole-map")
@click.option("--f-points", type=int, default=None)
@click.option("--eta-points", type=int, default=None)
@click.option("--eta-min", type=float, default=None)
@click.option("--eta-max", type=float, default=None)
@click.option("--grid-step", type=float, default=None, help="Angle grid per cell, degrees")
@click.option("--workers", type=int, default=None)
@click.option("--output", "-o", default=None, help="CSV path (default stdout)")
@click.pass_context
@_handled
def loophole_map_cmd(ctx, f_points, eta_points, eta_min, eta_max, grid_step, workers, output):
    """Maximized strict CH/N on the (f, eta) grid."""
    cfg = _config(ctx, **{
        "loophole.f_points": f_points, "loophole.eta_points": eta_points,
        "loophole.eta_min": eta_min, "loophole.eta_max": eta_max,
        "loophole.grid_step": grid_step, "loophole.workers": workers,
    })
    lp = cfg.loophole
    settings = cfg.optimizer.model_copy(update={"grid_step": lp.grid_step})
    m = loophole_map(lp.f_axis(), lp.eta_axis(), settings, lp.contour_levels, lp.workers)
    rows = [(f, eta, m.ch_over_n[i][j]) for i, f in enumerate(m.f_axis) for j, eta in enumerate(m.eta_axis)]
    crossings = m.zero_contour()
    console.print(f"map {len(m.f_axis)} x {len(m.eta_axis)}; eta_crit at f={m.f_axis[-1]:.3g}: {crossings[-1]}")
    _emit(
        ctx, cfg, output, ("f", "eta", "ch_over_n"), rows,
        contour_levels=" ".join(format(v, "g") for v in m.contour_levels),
    )


# -- lhv-bounds ---------------------------------------------------------------


@cli.command()
@click.option("--rs", type=float, default=None, help="Observed singles rate, 1/s")
@click.option("--visibility", type=float, default=None)
@click.option("--ch-positive/--ch-negative", default=None)
@click.option("--output", "-o", default=None, help="CSV path (default stdout)")
@click.pass_context
@_handled
def casado(ctx, rs, visibility, ch_positive, output):
    """Solve the rate bound for T and decide exclusion."""
    cfg = _config(ctx, **{
        "casado.parameters.R_S": rs, "casado.observed_visibility": visibility, "casado.ch_positive": ch_positive,
    })
    c = cfg.casado
    v = exclusion_verdict(
        c.parameters, c.observed_visibility, c.ch_positive,
        T_limit=c.T_limit, visibility_threshold=c.visibility_threshold,
    )
    color = {"excluded": "green", "not-excluded": "red"}.get(v.verdict.value, "yellow")
    console.print(f"[{color}]{v.verdict.value}[/]: {v.rationale}")
    _emit(
        ctx, cfg, output, ("R_S", "T_solved", "T_limit", "visibility", "ch_positive", "verdict"),
        [(v.R_S, v.T_solved, v.T_limit, v.visibility, v.ch_positive, v.verdict)],
    )


# -- detector-calibration -----------------------------------------------------


@cli.command()
@click.option("--seeds", type=int, default=None, help="Seeds per scenario")
@click.option("--output", "-o", default=None, help="CSV path (default stdout)")
@click.pass_context
@_handled
def calibrate(ctx, seeds, output):
    """Seed-averaged calibration estimate for each scenario."""
    cfg = _config(ctx, **{"calibration.n_seeds": seeds})
    c = cfg.calibration
    scenarios = [s.with_seed(cfg.seed) for s in c.scenarios()]
    rows = estimator_bias_scan(scenarios, c.n_seeds)
    flagged = sum(r.flagged for r in rows)
    if flagged:
        console.print(f"[yellow]{flagged} scenario(s) flagged[/]")
    _emit(
        ctx, cfg, output,
        ("eta1", "eta2", "pair_rate", "dark1", "dark2", "acquisition", "dead_time", "n_seeds", "n_failed",
         "mean_estimate", "bias", "stderr", "mean_reported_stderr", "coverage_2sigma", "flagged", "note"),
        [(r.scenario.eta1, r.scenario.eta2, r.scenario.pair_rate, r.scenario.dark1, r.scenario.dark2,
          r.scenario.acquisition, r.scenario.dead_time, r.n_seeds, r.n_failed, r.mean_estimate, r.bias,
          r.stderr, r.mean_reported_stderr, r.coverage_2sigma, r.flagged, r.note) for r in rows],
    )


# -- double-slit --------------------------------------------------------------


@cli.command("double-slit")
@click.option("--mode", type=click.Choice(["sqm", "dbb", "chi2"]), default="sqm")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), default=None,
              help="chi2: counts CSV (position,counts,stderr); synthetic when omitted")
@click.option("--marginals", default=None, help="sqm/dbb: also write the marginal densities here")
@click.option("--output", "-o", default=None, help="CSV path (default stdout)")
@click.pass_context
@_handled
def double_slit(ctx, mode, data, marginals, output):
    """Joint coincidence pattern or the chi2 model comparison."""
    cfg = _config(ctx)
    d = cfg.double_slit
    g = d.geometry
    if mode == "chi2":
        if data:
            counts = read_count_csv(data)
            scan = d.plane1.at(counts.positions)
        else:
            scan = d.plane1.at(np.linspace(-d.scan_half_width, d.scan_half_width, d.synthetic_points))
            counts = synthetic_counts(
                g, scan, d.plane2, d.fixed_x2, d.synthetic_peak_counts,
                RngStream(cfg.seed, stream_id=5), d.synthetic_background,
            )
        template = coincidence_profile(g, scan, d.plane2, d.fixed_x2)
        fits = [chi_square_compare(counts, template, background=True), chi_square_compare(counts, None, slope=True)]
        for fit in fits:
            console.print(f"{fit.model}: chi2={fit.chi2:.3f} dof={fit.dof} reduced={fit.reduced_chi2:.3f} p={fit.p_value:.3g}")
        _emit(
            ctx, cfg, output, ("model", "chi2", "dof", "reduced_chi2", "p_value"),
            [(f.model, f.chi2, f.dof, f.reduced_chi2, f.p_value) for f in fits],
            fixed_x2=d.fixed_x2, source="file" if data else "synthetic",
        )
        return

    x1 = np.linspace(d.x1_range[0], d.x1_range[1], d.grid_points)
    x2 = np.linspace(d.x2_range[0], d.x2_range[1], d.grid_points)
    build = sqm_joint_pattern if mode == "sqm" else dbb_joint_pattern
    pattern = build(g, d.plane1.at(x1), d.plane2.at(x2))
    qx1, qx2 = d.query
    density = joint_density if mode == "sqm" else dbb_density
    query = float(density(g, d.plane1, d.plane2, np.array([qx1]), np.array([qx2]))[0, 0])
    console.print(f"{mode} density at ({qx1:g}, {qx2:g}) m is {'positive' if query > 0.0 else 'zero'}")
    if marginals:
        write_csv(
            marginals, ("plane", "x", "density"), marginal_rows(pattern),
            metadata_lines(f"double-slit {mode} marginals", cfg.seed, cfg.sha256()),
        )
    _emit(ctx, cfg, output, ("x1", "x2", "density"), pattern_rows(pattern), mode=mode, query_positive=query > 0.0)


# -- qkd-d4 -------------------------------------------------------------------


@cli.group()
def qkd():
    """d=4 key distribution runs."""


def _qkd_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    fn = click.option("--output", "-o", default=None, help="CSV path (default stdout)")(fn)
    fn = click.option("--rounds", type=int, default=None)(fn)
    fn = click.option("--eve", type=click.Choice([k.value for k in EveKind]), default=None)(fn)
    return fn


_REPORT_COLUMNS = (
    "channel", "eve", "eta_e", "n_rounds", "n_postselected", "n_sifted", "sifted_rate", "qber", "qber_stderr",
    "symbol_error_rate", "I_AE_mutual", "I_AE_mutual_stderr", "I_AE_per_bit", "P_full_symbol",
    "P_full_symbol_stderr", "eve_guess_rate",
)


def _report_row(r) -> tuple:
    return (
        r.channel, r.eve_kind, r.intercept_fraction, r.n_rounds, r.n_postselected, r.n_sifted, r.sifted_rate,
        r.qber, r.qber_stderr, r.symbol_error_rate, r.I_AE_mutual, r.I_AE_mutual_stderr, r.I_AE_per_bit,
        r.P_full_symbol, r.P_full_symbol_stderr, r.eve_guess_rate,
    )


@qkd.command("run")
@_qkd_options
@click.option("--eta-e", type=float, default=None, help="Intercepted fraction")
@click.option("--single", is_flag=True, help="Polarization-only channel")
@click.option("--transcript", "transcript_path", default=None, help="Write per-round JSON lines here")
@click.pass_context
@_handled
def qkd_run(ctx, output, rounds, eve, eta_e, single, transcript_path):
    """One protocol run."""
    cfg = _config(ctx, **{"qkd.rounds": rounds, "qkd.eve.kind": eve, "qkd.eve.intercept_fraction": eta_e})
    q = cfg.qkd
    want = bool(transcript_path) or q.transcript
    if single:
        run = run_single_channel(q.rounds, q.eve, cfg.seed, f_pol=q.f_pol,
                                 alice_policy=q.alice, bob_policy=q.bob, transcript=want)
    else:
        state = DoubleEntangledState(phi=q.phi, f_pol=q.f_pol)
        run = run_protocol(state, q.rounds, q.alice, q.bob, q.eve, cfg.seed, transcript=want)
    if transcript_path and run.transcript is not None:
        write_jsonl(transcript_path, run.transcript)
    r = run.report
    console.print(f"{r.channel}: sifted {r.n_sifted}/{r.n_postselected}, qber={r.qber:.4f}, I_AE={r.I_AE_mutual:.4f}")
    if r.empty_sifted:
        console.print("[yellow]no sifted rounds[/]")
    _emit(ctx, cfg, output, _REPORT_COLUMNS, [_report_row(r)])


@qkd.command("eve-sweep")
@_qkd_options
@click.option("--single", is_flag=True, help="Polarization-only channel")
@click.pass_context
@_handled
def qkd_eve_sweep(ctx, output, rounds, eve, single):
    """Reports across the configured intercept fractions."""
    cfg = _config(ctx, **{"qkd.rounds": rounds, "qkd.eve.kind": eve})
    q = cfg.qkd
    state = DoubleEntangledState(phi=q.phi, f_pol=q.f_pol)
    reports = eve_sweep(state, q.eve_sweep, q.eve, q.rounds, cfg.seed, single=single,
                        alice_policy=q.alice, bob_policy=q.bob)
    _emit(ctx, cfg, output, _REPORT_COLUMNS, [_report_row(r) for r in reports])


@qkd.command("ratio")
@_qkd_options
@click.option("--metric", type=click.Choice([m.value for m in InformationMetric]), default=None)
@click.option("--target", type=float, default=None, help="Eve information to match")
@click.pass_context
@_handled
def qkd_ratio(ctx, output, rounds, eve, metric, target):
    """Double/single error ratio at equal Eve information."""
    cfg = _config(ctx, **{
        "qkd.rounds": rounds, "qkd.eve.kind": eve, "qkd.metric": metric, "qkd.target_information": target,
    })
    q = cfg.qkd
    kinds = [q.eve.kind] if q.eve.kind is not EveKind.NONE else [EveKind.FIXED_BASIS, EveKind.BREIDBART]
    state = DoubleEntangledState(phi=q.phi, f_pol=q.f_pol)
    results = [disturbance_ratio(k, q.target_information, q.metric, state=state, n_rounds=q.rounds, seed=cfg.seed)
               for k in kinds]
    for r in results:
        console.print(f"{r.eve_kind.value}/{r.metric.value}: ratio={r.ratio:.4f} +- {r.ratio_stderr:.2g}")
    _emit(
        ctx, cfg, output,
        ("eve", "metric", "target", "eta_single", "eta_double", "error_single", "error_double",
         "ratio", "ratio_stderr", "significance", "published_ratio"),
        [(r.eve_kind, r.metric, r.target_information, r.eta_single, r.eta_double, r.error_single,
          r.error_double, r.ratio, r.ratio_stderr, r.significance, r.published_ratio) for r in results],
    )


# -- reproduction -------------------------------------------------------------


@cli.command()
@click.option("--area", "areas", multiple=True, type=click.Choice(list(AREAS)), help="Restrict to these areas")
@click.option("--quick", is_flag=True, help="Coarser grids and fewer seeds")
@click.option("--report-dir", default="reports", help="Directory for the JSON and Markdown reports")
@click.pass_context
@_handled
def reproduce(ctx, areas, quick, report_dir):
    """Recompute the published figures and report discrepancies."""
    cfg = _config(ctx)
    run = ReproductionRunner(cfg, quick=quick).run(list(areas) or None)
    DiscrepancyDetector().check_run(run)
    generator = ReportGenerator(report_dir)
    json_path = generator.generate_json(run)
    md_path = generator.generate_markdown(run)
    _print_summary(run)
    console.print(f"\n[green]Reports saved to {json_path} and {md_path}[/]")
    if run.error:
        sys.exit(EXIT_RUNTIME)


def _print_summary(run) -> None:
    """Print a rich summary table."""
    console.print(f"\n[bold]Reproduction run {run.run_id[:8]}[/]  status: {run.status.value}")
    console.print(f"Checks: {run.total_checks} (agreed: {run.agreed}, disagreed: {run.disagreed})")
    if not run.discrepancies:
        console.print("\n[green]Every figure reproduced.[/]")
        return
    table = Table()
    table.add_column("Severity")
    table.add_column("Area")
    table.add_column("Figure")
    table.add_column("Message")
    for d in run.discrepancies:
        color = {"critical": "red", "warning": "yellow", "info": "blue"}.get(d.severity.value, "white")
        table.add_row(f"[{color}]{d.severity.value}[/]", d.area, d.check_name, d.message)
    console.print(table)


if __name__ == "__main__":
    cli()
