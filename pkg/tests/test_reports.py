"""Tests for BL-8: Reproduction runs, discrepancies and reports."""

from __future__ import annotations

import json

import pytest

from pkg.comparison.detector import DiscrepancyDetector
from pkg.errors import BiphotonLabError
from pkg.models.report import FigureCheck, ReproductionRun, RunStatus, Severity
from pkg.reports.generator import ReportGenerator
from pkg.reproduction.runner import ReproductionRunner


def _fig(computed: float, published: float | None = 1.0, **kw) -> FigureCheck:
    return FigureCheck(name="x", area="bell", computed=computed, published=published, tolerance=0.1, **kw)


def _make_run() -> ReproductionRun:
    run = ReproductionRun(run_id="0123456789abcdef", seed=3, status=RunStatus.COMPLETED)
    run.checks = [
        FigureCheck(name="visibility", area="bell", computed=1.0, published=1.0, tolerance=1e-9),
        FigureCheck(name="angle", area="bell", computed=72.7, published=72.24, tolerance=0.05, unit="deg",
                    asserted=False, note="optimum of a nearby f"),
        FigureCheck(name="period", area="double-slit", computed=9.5, published=8.49, tolerance=0.17, unit="mm"),
    ]
    run.compute_summary()
    DiscrepancyDetector().check_run(run)
    return run


class TestFigureCheck:
    def test_agreement(self):
        assert _fig(1.05).agrees
        assert not _fig(1.2).agrees
        assert _fig(1.2).delta == pytest.approx(0.2)

    def test_nothing_published(self):
        f = _fig(5.0, published=None)
        assert f.agrees
        assert f.delta is None


class TestDiscrepancyDetector:
    def test_agreeing_figure(self):
        assert DiscrepancyDetector().check(_fig(1.05)) is None

    def test_warning(self):
        d = DiscrepancyDetector().check(_fig(1.15))
        assert d.severity is Severity.WARNING
        assert d.delta == pytest.approx(0.15)

    def test_critical(self):
        assert DiscrepancyDetector().check(_fig(1.25)).severity is Severity.CRITICAL

    def test_not_asserted_is_info(self):
        d = DiscrepancyDetector().check(_fig(5.0, asserted=False, note="convention"))
        assert d.severity is Severity.INFO
        assert d.message.endswith("; convention")

    def test_custom_factor(self):
        assert DiscrepancyDetector(critical_factor=5.0).check(_fig(1.25)).severity is Severity.WARNING

    def test_check_run_stores(self):
        run = _make_run()
        assert [d.check_name for d in run.discrepancies] == ["angle", "period"]
        assert [d.severity for d in run.discrepancies] == [Severity.INFO, Severity.CRITICAL]


class TestReportGenerator:
    def test_generate_json(self, tmp_path):
        """JSON report should be valid JSON."""
        gen = ReportGenerator(output_dir=tmp_path)
        run = _make_run()
        path = gen.generate_json(run)
        assert path.endswith("reproduction-01234567.json")
        with open(path) as f:
            data = json.load(f)
        assert data["run_id"] == run.run_id
        assert len(data["checks"]) == 3
        assert len(data["discrepancies"]) == 2

    def test_generate_markdown(self, tmp_path):
        """Markdown report should contain key sections."""
        gen = ReportGenerator(output_dir=tmp_path)
        with open(gen.generate_markdown(_make_run())) as f:
            content = f.read()
        assert "# Reproduction Report: 01234567" in content
        assert "## Summary" in content
        assert "## Discrepancies" in content
        assert "## double-slit" in content
        assert "(not asserted)" in content

    def test_same_run_same_bytes(self, tmp_path):
        gen = ReportGenerator(output_dir=tmp_path)
        first = gen.render_markdown(_make_run())
        assert gen.render_markdown(_make_run()) == first

    def test_summary_dict(self, tmp_path):
        """Summary dict should have correct structure."""
        summary = ReportGenerator(output_dir=tmp_path).generate_summary_dict(_make_run())
        assert summary["total_checks"] == 3
        assert summary["agreed"] == 1
        assert summary["disagreed"] == 2
        assert (summary["critical"], summary["warning"], summary["info"]) == (1, 0, 1)
        assert summary["agreement_rate"] == 0.33


class TestReproductionRunner:
    def test_lhv_area(self, config):
        run = ReproductionRunner(config, quick=True).run(["lhv"])
        assert run.status is RunStatus.COMPLETED
        assert run.run_id == config.sha256()
        assert run.total_checks == 3
        assert run.agreed == 3
        assert DiscrepancyDetector().check_run(run) == []

    def test_unknown_area(self, config):
        with pytest.raises(BiphotonLabError):
            ReproductionRunner(config).run(["optics"])

    def test_failed_area_recorded(self, config):
        """A library error inside one area fails the run without raising."""
        cfg = config.override(**{"casado.parameters.eta": 0.0})
        run = ReproductionRunner(cfg, quick=True).run(["lhv"])
        assert run.status is RunStatus.FAILED
        assert run.error.startswith("lhv:")
        assert run.total_checks == 0

    def test_quick_coarsens_grid(self, config):
        assert ReproductionRunner(config, quick=True).settings.grid_step >= 5.0
        assert ReproductionRunner(config).settings == config.optimizer
