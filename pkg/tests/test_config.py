"""Tests for run/sweep configuration parsing and validation."""

import numpy as np
import pytest
from pydantic import ValidationError

from lab.config import (
    RunConfig,
    SweepSpec,
    build_run_config,
    build_sweep_spec,
    load_run_config,
    parse_config_text,
)
from network.models import CavityKind
from shared.errors import ConfigurationError


REALISTIC = build_run_config(None, network="realistic", tau=0.1, a4=0.01)

class TestParseConfigText:
    def test_key_values_and_comments(self):
        text = """
        # uncontrolled run
        cavity1 = damped
        gain = 0.5   # trailing comment

        f = 0.1, 2.2, -0.3, -3.2
        """
        assert parse_config_text(text) == {"cavity1": "damped", "gain": "0.5", "f": "0.1, 2.2, -0.3, -3.2"}

    def test_duplicate_key(self):
        with pytest.raises(ConfigurationError, match="duplicate"):
            parse_config_text("gain = 1\ngain = 2\n")

    def test_malformed_line(self):
        with pytest.raises(ConfigurationError, match=":2:"):
            parse_config_text("gain = 1\njust words\n")

    def test_empty_key(self):
        with pytest.raises(ConfigurationError):
            parse_config_text("= 3\n")


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.network == "ideal"
        assert cfg.cavity1 is CavityKind.DISPERSIVE
        assert cfg.cavity2 is CavityKind.DAMPED
        assert cfg.m == 0.2 and cfg.kappa == 1.0
        assert cfg.dim == 4
        np.testing.assert_array_equal(cfg.initial_covariance(), 2.0 * np.eye(4))

    def test_string_values_from_file(self):
        cfg = build_run_config({"cavity1": "Damped", "gain": "0.75", "f": "1, 2, 3, 4", "v0": "0.5"})
        assert cfg.cavity1 is CavityKind.DAMPED
        assert cfg.gain == 0.75
        assert cfg.f == (1.0, 2.0, 3.0, 4.0)
        assert cfg.v0 == 0.5

    def test_riccati_keyword(self):
        assert build_run_config(None, f="Riccati").f == "riccati"

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError, match="colour"):
            build_run_config({"colour": "blue"})

    def test_wrong_f_length(self):
        with pytest.raises(ConfigurationError):
            build_run_config(None, f="1, 2, 3")

    def test_v0_matrix(self):
        values = ",".join(str(x) for x in (3.0 * np.eye(4)).reshape(-1))
        cfg = build_run_config(None, v0=values)
        np.testing.assert_array_equal(cfg.initial_covariance(), 3.0 * np.eye(4))

    def test_v0_length_must_match_network(self):
        with pytest.raises(ConfigurationError):
            build_run_config(None, v0=",".join(["1"] * 9))
        with pytest.raises(ConfigurationError, match="25"):
            build_run_config(None, network="realistic", tau=0.1, a4=0.01, v0=",".join(["1"] * 16))

    def test_realistic_dimension(self):
        cfg = build_run_config(None, network="realistic", tau=0.1, a4=0.01)
        assert cfg.dim == 5
        assert cfg.initial_covariance().shape == (5, 5)
        params = cfg.network_params()
        assert params.detector.a1 == pytest.approx(-10.0)

    def test_realistic_needs_detector(self):
        with pytest.raises(ConfigurationError, match="tau and a4"):
            build_run_config(None, network="realistic", tau=0.1)

    def test_dt_smaller_than_t_end(self):
        with pytest.raises(ConfigurationError):
            build_run_config(None, t_end=1.0, dt=2.0)
        assert build_run_config(None, t_end=0.0, dt=0.1).t_end == 0.0

    @pytest.mark.parametrize("field,value", [("m", "0"), ("kappa", "-1"), ("alpha", "1.5"),
                                             ("gain", "nan"), ("stride", "0")])
    def test_invalid_values(self, field, value):
        with pytest.raises(ConfigurationError):
            build_run_config({field: value})

    def test_none_overrides_ignored(self):
        cfg = build_run_config({"gain": "0.5"}, gain=None, m=0.3)
        assert cfg.gain == 0.5 and cfg.m == 0.3

    def test_riccati_must_be_resolved(self):
        with pytest.raises(ConfigurationError):
            build_run_config(None, f="riccati").network_params()
        params = build_run_config(None, f="riccati").network_params(f=np.ones(4))
        assert params.f == (1.0, 1.0, 1.0, 1.0)

    def test_frozen(self):
        with pytest.raises(ValidationError):
            RunConfig().gain = 1.0


class TestLoadRunConfig:
    def test_file_with_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("cavity1 = damped\ngain = 0.25\n")
        cfg = load_run_config(path, gain=1.0)
        assert cfg.cavity1 is CavityKind.DAMPED
        assert cfg.gain == 1.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_run_config(tmp_path / "absent.cfg")


class TestSweepSpec:
    def test_parses_values(self):
        spec = build_sweep_spec("g", "0, 0.5, 1", RunConfig())
        assert spec.values == (0.0, 0.5, 1.0)
        assert spec.point_config(0.5).gain == 0.5

    def test_decreasing_allowed(self):
        assert build_sweep_spec("alpha", "1, 0.95, 0.9", REALISTIC).values == (1.0, 0.95, 0.9)

    @pytest.mark.parametrize("values", ["0, 1, 0.5", "0.5, 0.5", ""])
    def test_rejects_non_monotonic_or_empty(self, values):
        with pytest.raises(ConfigurationError):
            build_sweep_spec("g", values, RunConfig())

    def test_alpha_needs_realistic(self):
        with pytest.raises(ConfigurationError, match="alpha sweeps need the realistic"):
            build_sweep_spec("alpha", "1, 0.9", RunConfig())
        assert build_sweep_spec("alpha", "1, 0.9", REALISTIC).point_config(0.9).alpha == 0.9

    def test_tau_needs_realistic(self):
        with pytest.raises(ConfigurationError, match="realistic"):
            build_sweep_spec("tau", "0.1, 0.2", RunConfig())
        base = build_run_config(None, network="realistic", tau=0.1, a4=0.01)
        spec = build_sweep_spec("tau", "0.1, 0.2", base)
        assert spec.point_config(0.2).tau == 0.2

    def test_invalid_point(self):
        spec = SweepSpec(parameter="alpha", values=(1.0, 1.2), base=REALISTIC)
        with pytest.raises(ConfigurationError):
            spec.point_config(1.2)

    def test_unknown_parameter(self):
        with pytest.raises(ConfigurationError):
            build_sweep_spec("m", "0.1, 0.2", RunConfig())
