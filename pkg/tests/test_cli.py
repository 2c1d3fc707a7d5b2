"""Tests for the qfb-lab command line."""

import re

import pytest
from click.testing import CliRunner

from lab.cli import EXIT_NUMERICAL, cli

F_BAR_DISPERSIVE_DAMPED = [0.1212, 2.2196, -0.3163, -3.2277]


@pytest.fixture
def runner():
    return CliRunner()


def field(output: str, name: str) -> str:
    for line in output.splitlines():
        if line.startswith(name + ":"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"{name} missing from output:\n{output}")


class TestDesign:
    def test_prints_feedback_vector(self, runner):
        result = runner.invoke(cli, ["design"])
        assert result.exit_code == 0, result.output
        f = [float(x) for x in field(result.stdout, "f_bar").split()]
        assert f == pytest.approx(F_BAR_DISPERSIVE_DAMPED, abs=1e-3)
        assert float(field(result.stdout, "detV")) == pytest.approx(0.0625, abs=1e-6)

    def test_damped_damped(self, runner):
        result = runner.invoke(cli, ["design", "--cavity1", "damped"])
        assert result.exit_code == 0, result.output
        f = [float(x) for x in field(result.stdout, "f_bar").split()]
        assert f == pytest.approx([0.0629, 0.1525, 0.2479, -0.5830], abs=1e-3)

    def test_realistic_rejected(self, runner):
        result = runner.invoke(cli, ["design", "--network", "realistic", "--tau", "0.1", "--a4", "0.01"])
        assert result.exit_code == 2


class TestSimulate:
    def test_stdout_csv(self, runner):
        result = runner.invoke(cli, ["simulate", "--t-end", "1", "--dt", "0.01", "--stride", "50"])
        assert result.exit_code == 0, result.output
        lines = result.stdout.strip().split("\n")
        assert lines[0].startswith("t,EN,P,delta_tilde,detV,V11,")
        assert len(lines) == 1 + 3

    def test_out_file(self, runner, tmp_path):
        out = tmp_path / "run.csv"
        result = runner.invoke(cli, ["simulate", "--t-end", "10", "--dt", "0.01", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.exists()
        match = re.search(r"death t=([0-9.]+)", result.stdout)
        assert match, result.stdout
        assert float(match.group(1)) == pytest.approx(6.2, abs=0.15)

    def test_config_file_with_override(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("t_end = 1\ndt = 0.01\nstride = 100\ncavity1 = damped\n")
        result = runner.invoke(cli, ["simulate", "--config", str(cfg), "--stride", "50"])
        assert result.exit_code == 0, result.output
        assert len(result.stdout.strip().split("\n")) == 1 + 3

    def test_bad_config_is_usage_error(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("gain = 1\ngain = 2\n")
        result = runner.invoke(cli, ["simulate", "--config", str(cfg)])
        assert result.exit_code == 2

    def test_unphysical_v0(self, runner):
        result = runner.invoke(cli, ["simulate", "--t-end", "1", "--dt", "0.01", "--v0", "0.1"])
        assert result.exit_code == 2


class TestSteady:
    def test_damped_damped(self, runner):
        result = runner.invoke(cli, ["steady", "--cavity1", "damped", "--cavity2", "damped"])
        assert result.exit_code == 0, result.output
        assert field(result.stdout, "stability") == "Stable"
        assert float(field(result.stdout, "EN")) == pytest.approx(0.21, abs=0.02)
        assert float(field(result.stdout, "P")) == pytest.approx(0.8, abs=0.05)

    def test_marginal_network_exits_numerical(self, runner):
        result = runner.invoke(cli, ["steady"])
        assert result.exit_code == EXIT_NUMERICAL == 3

    def test_log2(self, runner):
        natural = runner.invoke(cli, ["steady", "--cavity1", "damped"])
        base2 = runner.invoke(cli, ["steady", "--cavity1", "damped", "--log2"])
        en, en2 = float(field(natural.stdout, "EN")), float(field(base2.stdout, "EN"))
        assert en2 == pytest.approx(en / 0.6931471805599453, abs=2e-6)


class TestSweep:
    def test_agrees_with_design(self, runner):
        design = runner.invoke(cli, ["design"])
        sweep = runner.invoke(cli, ["sweep", "g", "0,1", "--f", "riccati"])
        assert sweep.exit_code == 0, sweep.output
        lines = sweep.stdout.strip().split("\n")
        assert lines[0] == "value,status,EN,P"
        assert lines[1] == "0,marginal,,"
        value, status, en, _ = lines[2].split(",")
        assert status == "steady"
        assert float(en) == pytest.approx(float(field(design.stdout, "EN")), abs=1e-4)

    def test_alpha_on_ideal_network_is_usage_error(self, runner):
        result = runner.invoke(cli, ["sweep", "alpha", "1,0.9"])
        assert result.exit_code == 2

    def test_non_monotonic_values(self, runner):
        result = runner.invoke(cli, ["sweep", "g", "0,1,0.5"])
        assert result.exit_code == 2


class TestFigure:
    def test_unknown_id(self, runner, tmp_path):
        result = runner.invoke(cli, ["figure", "9", "--out-dir", str(tmp_path)])
        assert result.exit_code == 2

    def test_writes_files(self, runner, tmp_path):
        result = runner.invoke(cli, ["figure", "2", "--out-dir", str(tmp_path), "--t-end", "0.5", "--dt", "0.01"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "fig2_dispersive_damped.csv").exists()
        assert "Wrote" in result.stdout
