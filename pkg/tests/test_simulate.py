"""Tests for config-driven simulations, steady states and CSV output."""

import math

import numpy as np
import pytest

from lab.config import build_run_config
from lab.csv_output import (
    SWEEP_FIELDS,
    TRAJECTORY_FIELDS,
    SweepRow,
    fmt,
    render_csv,
    write_csv,
)
from lab.simulate import (
    evaluate_steady,
    resolve_feedback,
    run_simulation,
    save_trajectory,
    steady_state,
    trajectory_csv,
)
from network.dynamics import Stability, Trajectory
from network.entanglement import TransitionKind
from network.models import design_ideal_feedback
from shared.errors import NoSteadyStateError, UnphysicalCovarianceError
from shared.gaussian_core import is_physical


def short_run(**overrides):
    values = {"t_end": 1.0, "dt": 1e-2, "stride": 10}
    values.update(overrides)
    return build_run_config(None, **values)


class TestCsvFormatting:
    def test_twelve_significant_digits(self):
        assert fmt(1.0 / 3.0) == "0.333333333333"
        assert fmt(2.0) == "2"
        assert fmt(1e-15) == "1e-15"

    def test_missing_values_are_empty(self):
        assert fmt(None) == ""
        assert fmt(float("nan")) == ""

    def test_render_uses_newlines(self):
        text = render_csv(["a", "b"], [["1", "2"], ["3", "4"]])
        assert text == "a,b\n1,2\n3,4\n"

    def test_sweep_row(self):
        assert SweepRow(value=0.0, status="marginal").to_row() == ["0", "marginal", "", ""]
        row = SweepRow(value=1.0, status="steady", log_negativity=math.log(2.0), purity=0.5)
        assert row.to_row(log2=True) == ["1", "steady", "1", "0.5"]

    def test_write_creates_parent(self, tmp_path):
        path = write_csv(tmp_path / "nested" / "out.csv", SWEEP_FIELDS, [])
        assert path.read_text() == "value,status,EN,P\n"


class TestRunSimulation:
    def test_columns_and_samples(self):
        result = run_simulation(short_run())
        lines = trajectory_csv(result).split("\n")
        assert lines[0].split(",") == TRAJECTORY_FIELDS
        assert lines[-1] == ""
        assert len(lines) == 1 + 11 + 1
        np.testing.assert_allclose(result.times, np.linspace(0.0, 1.0, 11), atol=1e-12)
        assert len(lines[1].split(",")) == 21

    def test_zero_duration_single_row(self):
        result = run_simulation(short_run(t_end=0.0))
        assert len(result.rows) == 1
        row = result.rows[0]
        assert row.t == 0.0
        assert row.log_negativity == 0.0
        assert row.purity == pytest.approx(1 / 16)
        assert row.det_v == pytest.approx(16.0)
        assert row.delta_tilde == pytest.approx(8.0)

    def test_unphysical_initial_state(self):
        with pytest.raises(UnphysicalCovarianceError):
            run_simulation(short_run(v0=0.1))

    @pytest.mark.parametrize("overrides", [
        {},
        {"cavity1": "damped"},
        {"network": "realistic", "tau": 0.1, "a4": 0.01, "gain": 1.0, "f": "riccati"},
    ])
    def test_emitted_rows_are_physical(self, overrides):
        result = run_simulation(short_run(t_end=10.0, stride=1, **overrides))
        assert len(result.rows) == 1001
        for row in result.rows:
            assert is_physical(row.covariance, 1e-8), f"unphysical row at t={row.t}"

    def test_unphysical_sample_is_not_emitted(self, monkeypatch):
        def fake_propagate(dd, V0, t_end, dt, stride):
            return Trajectory(times=np.array([0.0, 0.5]), covariances=np.stack([V0, 0.1 * np.eye(4)]))

        monkeypatch.setattr("lab.simulate.propagate_lyapunov", fake_propagate)
        with pytest.raises(UnphysicalCovarianceError, match="t=0.5"):
            run_simulation(short_run())

    def test_deterministic(self):
        assert trajectory_csv(run_simulation(short_run())) == trajectory_csv(run_simulation(short_run()))

    def test_log2_column(self):
        cfg = short_run(t_end=3.0)
        result = run_simulation(cfg)
        natural = trajectory_csv(result).split("\n")[-2].split(",")
        base2 = trajectory_csv(result, log2=True).split("\n")[-2].split(",")
        assert float(natural[1]) > 0
        assert float(base2[1]) == pytest.approx(float(natural[1]) / math.log(2.0), rel=1e-10)
        assert natural[2:] == base2[2:]

    def test_sudden_death_transition(self):
        result = run_simulation(short_run(t_end=10.0, stride=1))
        deaths = [e.time for e in result.transitions() if e.kind is TransitionKind.DEATH]
        assert deaths and deaths[0] == pytest.approx(6.2, abs=0.1)
        assert result.max_log_negativity == pytest.approx(0.65, abs=0.05)

    def test_realistic_run_reports_cavity_block(self):
        cfg = short_run(network="realistic", tau=0.1, a4=0.01, gain=0.5, f="riccati", t_end=0.5, dt=1e-3, stride=100)
        result = run_simulation(cfg, check_dual=True)
        assert result.trajectory.covariances.shape[1:] == (5, 5)
        assert all(r.covariance.shape == (4, 4) for r in result.rows)

    def test_save(self, tmp_path):
        result = run_simulation(short_run())
        path = save_trajectory(result, tmp_path / "run.csv")
        text = path.read_bytes().decode()
        assert "\r" not in text
        assert text == trajectory_csv(result)


class TestSteady:
    def test_damped_damped(self):
        result = steady_state(short_run(cavity1="damped"))
        assert result.status == "steady"
        assert result.stability.kind is Stability.STABLE
        assert result.record.log_negativity == pytest.approx(0.21, abs=0.02)
        assert result.record.purity == pytest.approx(0.8, abs=0.05)

    def test_uncontrolled_dispersive_damped_has_no_steady_state(self):
        cfg = short_run()
        result = evaluate_steady(cfg)
        assert result.status == "marginal"
        assert result.covariance is None
        with pytest.raises(NoSteadyStateError, match="marginal"):
            steady_state(cfg)

    def test_riccati_feedback(self):
        cfg = short_run(gain=1.0, f="riccati")
        f, solution = resolve_feedback(cfg)
        expected = design_ideal_feedback(cfg.network_params(f=np.zeros(4))).f_bar
        np.testing.assert_allclose(f, expected)
        assert solution is not None
        result = steady_state(cfg)
        assert result.record.log_negativity == pytest.approx(2.2, abs=0.1)

    def test_explicit_feedback_passes_through(self):
        f, solution = resolve_feedback(short_run(f="1, 2, 3, 4"))
        np.testing.assert_array_equal(f, [1.0, 2.0, 3.0, 4.0])
        assert solution is None

    def test_realistic_uses_ideal_design(self):
        ideal = short_run(gain=1.0, f="riccati")
        realistic = short_run(gain=1.0, f="riccati", network="realistic", tau=0.01, a4=0.01)
        np.testing.assert_allclose(resolve_feedback(realistic)[0], resolve_feedback(ideal)[0])
        result = steady_state(realistic)
        assert result.covariance.V.shape == (4, 4)
