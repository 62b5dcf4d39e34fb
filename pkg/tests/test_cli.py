"""Tests for BL-11: Command line."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from cli.main import cli


def _rows(path: Path) -> list[dict[str, str]]:
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _meta(path: Path) -> dict[str, str]:
    return dict(
        ln[2:].split("=", 1) for ln in path.read_text().splitlines() if ln.startswith("# ") and "=" in ln
    )


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def fast_config(tmp_path):
    """Config with a coarse angle grid and short Monte Carlo runs."""
    p = tmp_path / "fast.json"
    p.write_text(json.dumps({
        "optimizer": {"grid_step": 5.0},
        "qkd": {"rounds": 20_000},
        "calibration": {"n_seeds": 5},
    }))
    return str(p)


class TestBellCommands:
    def test_ch_scan(self, runner, tmp_path):
        out = tmp_path / "scan.csv"
        result = runner.invoke(cli, ["ch-scan", "--steps", "36", "-o", str(out)])
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert len(rows) == 36
        assert max(float(r["conditional"]) for r in rows) == pytest.approx(1.0)
        meta = _meta(out)
        assert meta["command"] == "ch-scan"
        assert float(meta["visibility"]) == pytest.approx(1.0)

    def test_rerun_identical(self, runner, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        runner.invoke(cli, ["--seed", "4", "ch-scan", "--steps", "12", "-o", str(a)])
        runner.invoke(cli, ["--seed", "4", "ch-scan", "--steps", "12", "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()
        assert _meta(a)["seed"] == "4"

    def test_ch_optimize(self, runner, fast_config, tmp_path):
        out = tmp_path / "opt.csv"
        result = runner.invoke(cli, ["--config", fast_config, "ch-optimize", "--f", "1.0", "-o", str(out)])
        assert result.exit_code == 0, result.output
        (row,) = _rows(out)
        assert float(row["theta1"]) == pytest.approx(67.5, abs=0.05)
        assert float(row["ch_over_n"]) == pytest.approx(0.2071, abs=1e-4)
        assert row["violation"] == "true"

    def test_ch_optimize_below_threshold(self, runner, fast_config, tmp_path):
        out = tmp_path / "opt.csv"
        args = ["--config", fast_config, "ch-optimize", "--eta1", "0.7", "--eta2", "0.7", "--form", "strict", "-o", str(out)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        assert _rows(out)[0]["violation"] == "false"

    def test_loophole_map(self, runner, tmp_path):
        out = tmp_path / "map.csv"
        args = ["loophole-map", "--f-points", "2", "--eta-points", "2", "--eta-min", "0.5", "--eta-max", "1.0",
                "--grid-step", "5", "-o", str(out)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert len(rows) == 4
        corner = rows[-1]
        assert (float(corner["f"]), float(corner["eta"])) == (1.0, 1.0)
        assert float(corner["ch_over_n"]) == pytest.approx(0.2071, abs=1e-3)
        assert _meta(out)["contour_levels"] == "0 0.01 0.1 0.15 0.2"

    def test_loophole_map_decreasing_eta(self, runner):
        result = runner.invoke(cli, ["loophole-map", "--eta-min", "0.9", "--eta-max", "0.8"])
        assert result.exit_code == 2

    def test_ch_evaluate(self, runner, tmp_path):
        out = tmp_path / "terms.csv"
        result = runner.invoke(cli, ["ch-evaluate", "-o", str(out)])
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert len(rows) == 7
        assert rows[-1]["term"] == "CH"
        assert float(rows[-1]["value"]) == pytest.approx(0.2071, abs=1e-4)


class TestLhvAndCalibration:
    def test_casado_excluded(self, runner, tmp_path):
        out = tmp_path / "casado.csv"
        result = runner.invoke(cli, ["casado", "-o", str(out)])
        assert result.exit_code == 0, result.output
        (row,) = _rows(out)
        assert row["verdict"] == "excluded"
        assert float(row["T_solved"]) == pytest.approx(705.6, rel=1e-3)

    def test_casado_bright_detector(self, runner, tmp_path):
        out = tmp_path / "casado.csv"
        result = runner.invoke(cli, ["casado", "--rs", "1e11", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert _rows(out)[0]["verdict"] == "not-excluded"

    def test_calibrate(self, runner, fast_config, tmp_path):
        out = tmp_path / "cal.csv"
        result = runner.invoke(cli, ["--config", fast_config, "calibrate", "--seeds", "4", "-o", str(out)])
        assert result.exit_code == 0, result.output
        (row,) = _rows(out)
        assert row["n_seeds"] == "4"
        assert float(row["mean_estimate"]) == pytest.approx(0.51, abs=0.01)


class TestDoubleSlitCommand:
    def test_chi2_synthetic(self, runner, tmp_path):
        out = tmp_path / "chi2.csv"
        result = runner.invoke(cli, ["double-slit", "--mode", "chi2", "-o", str(out)])
        assert result.exit_code == 0, result.output
        template, line = _rows(out)
        assert float(line["p_value"]) < 0.05
        assert _meta(out)["source"] == "synthetic"

    def test_chi2_from_file(self, runner, tmp_path):
        data = tmp_path / "counts.csv"
        data.write_text(
            "position,counts,stderr\n"
            + "".join(f"{x},{c},{max(c, 1) ** 0.5}\n" for x, c in zip(
                (-6e-3, -4e-3, -2e-3, 0.0, 2e-3, 4e-3, 6e-3), (40, 12, 3, 25, 60, 48, 9),
            ))
        )
        out = tmp_path / "chi2.csv"
        result = runner.invoke(cli, ["double-slit", "--mode", "chi2", "--data", str(data), "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert len(_rows(out)) == 2
        assert _meta(out)["source"] == "file"

    def test_dbb_pattern(self, runner, tmp_path):
        out, marg = tmp_path / "dbb.csv", tmp_path / "marg.csv"
        result = runner.invoke(cli, ["double-slit", "--mode", "dbb", "--marginals", str(marg), "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert _meta(out)["query_positive"] == "false"
        assert len(_rows(out)) == 241 * 241
        assert len(_rows(marg)) == 2 * 241

    def test_dbb_query_between_nodes(self, runner, tmp_path):
        """A query just right of the axis is evaluated there, not at the nearest grid node on the axis."""
        cfg = tmp_path / "query.json"
        cfg.write_text(json.dumps({"double_slit": {"query": [-0.017, 1e-4]}}))
        out = tmp_path / "dbb.csv"
        result = runner.invoke(cli, ["--config", str(cfg), "double-slit", "--mode", "dbb", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert _meta(out)["query_positive"] == "true"

    def test_outputs_create_directories(self, runner, tmp_path):
        out, marg = tmp_path / "runs" / "dbb.csv", tmp_path / "runs" / "planes" / "marg.csv"
        result = runner.invoke(cli, ["double-slit", "--mode", "sqm", "--marginals", str(marg), "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert _meta(marg)["command"] == "double-slit sqm marginals"
        assert _meta(out)["command"] == "double-slit"
        assert _meta(out)["query_positive"] == "true"

    def test_coarse_grid_runtime_error(self, runner, tmp_path):
        cfg = tmp_path / "coarse.json"
        cfg.write_text(json.dumps({"double_slit": {"grid_points": 8}}))
        result = runner.invoke(cli, ["--config", str(cfg), "double-slit", "--mode", "sqm", "-o", str(tmp_path / "x.csv")])
        assert result.exit_code == 1


class TestQkdCommands:
    def test_single_channel_run(self, runner, fast_config, tmp_path):
        out, log = tmp_path / "run.csv", tmp_path / "rounds.jsonl"
        args = ["--config", fast_config, "qkd", "run", "--single", "--eve", "fixed-basis", "--eta-e", "1.0",
                "--transcript", str(log), "-o", str(out)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        (row,) = _rows(out)
        assert row["channel"] == "single"
        assert float(row["qber"]) == pytest.approx(0.25, abs=0.03)
        assert len(log.read_text().splitlines()) == 20_000

    def test_eve_sweep(self, runner, fast_config, tmp_path):
        out = tmp_path / "sweep.csv"
        result = runner.invoke(cli, ["--config", fast_config, "qkd", "eve-sweep", "--eve", "fixed-basis", "-o", str(out)])
        assert result.exit_code == 0, result.output
        rows = _rows(out)
        assert [float(r["eta_e"]) for r in rows] == [0.0, 0.5, 1.0]
        assert float(rows[0]["qber"]) == 0.0

    def test_ratio(self, runner, tmp_path):
        out = tmp_path / "ratio.csv"
        args = ["qkd", "ratio", "--eve", "fixed-basis", "--rounds", "60000", "--target", "0.1", "-o", str(out)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        (row,) = _rows(out)
        assert row["eve"] == "fixed-basis"
        assert float(row["ratio"]) > 1.0


class TestExitCodes:
    def test_missing_config(self, runner, tmp_path):
        result = runner.invoke(cli, ["--config", str(tmp_path / "absent.json"), "casado"])
        assert result.exit_code == 2

    def test_unknown_config_key(self, runner, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"source": {"brightness": 3}}))
        assert runner.invoke(cli, ["--config", str(cfg), "casado"]).exit_code == 2

    def test_bad_override(self, runner):
        assert runner.invoke(cli, ["ch-optimize", "--eta1", "1.5"]).exit_code == 2


class TestReproduce:
    def test_lhv_area(self, runner, tmp_path):
        result = runner.invoke(cli, ["reproduce", "--area", "lhv", "--quick", "--report-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert len(list(tmp_path.glob("reproduction-*.json"))) == 1
        assert len(list(tmp_path.glob("reproduction-*.md"))) == 1
