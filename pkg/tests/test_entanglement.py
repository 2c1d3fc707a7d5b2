"""Tests for logarithmic negativity, purity and transition detection."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from network.entanglement import (
    TransitionKind,
    delta_tilde,
    detect_transitions,
    entanglement_record,
    log_negativity,
    log_negativity_from_invariants,
    min_symplectic_eigenvalue,
    purity,
)
from shared.errors import DimensionError, UnphysicalCovarianceError
from shared.gaussian_core import block_partition, sigma, two_mode_squeezed

SQUEEZE_VALUES = np.linspace(0.1, 1.5, 15)


def random_single_mode_symplectic(rng):
    """Rotation * squeeze * rotation, det = 1."""
    def rot(theta):
        return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    r = rng.uniform(-1.0, 1.0)
    return rot(rng.uniform(0, 2 * np.pi)) @ np.diag([np.exp(r), np.exp(-r)]) @ rot(rng.uniform(0, 2 * np.pi))


class TestDeltaTilde:
    def test_separable_initial_state(self):
        assert delta_tilde(block_partition(2 * np.eye(4))) == pytest.approx(8.0)

    def test_vacuum(self):
        assert delta_tilde(block_partition(0.5 * np.eye(4))) == pytest.approx(0.5)

    @pytest.mark.parametrize("r", [0.1, 0.5, 1.2])
    def test_squeezed(self, r):
        assert delta_tilde(block_partition(two_mode_squeezed(r))) == pytest.approx(np.cosh(4 * r) / 2)


class TestSymplecticEigenvalue:
    def test_vacuum(self):
        assert min_symplectic_eigenvalue(0.5 * np.eye(4)) == pytest.approx(0.5)
        assert log_negativity(0.5 * np.eye(4)) == 0.0

    def test_zero_discriminant_state(self):
        assert min_symplectic_eigenvalue(2 * np.eye(4)) == pytest.approx(2.0, abs=1e-6)
        assert log_negativity(2 * np.eye(4)) == 0.0

    def test_squeezed_family(self):
        for r in SQUEEZE_VALUES:
            nu = min_symplectic_eigenvalue(two_mode_squeezed(r))
            assert abs(nu - np.exp(-2 * r) / 2) < 1e-10, f"r={r}: nu={nu}"

    def test_squeezed_log_negativity_is_2r(self):
        for r in SQUEEZE_VALUES:
            en = log_negativity(two_mode_squeezed(r))
            assert abs(en - 2 * r) < 1e-9, f"r={r}: E_N={en}"
        assert log_negativity(two_mode_squeezed(0.5)) == pytest.approx(1.0)

    def test_unphysical_discriminant_raises(self):
        # delta_tilde = 0 but det V = 3: discriminant -12
        V = np.diag([1.0, -1.0, 1.0, 1.0])
        V[0, 2] = V[2, 0] = 2.0
        with pytest.raises(UnphysicalCovarianceError):
            min_symplectic_eigenvalue(V)

    def test_wrong_dimension(self):
        with pytest.raises(DimensionError):
            log_negativity(np.eye(2))


class TestInvariance:
    @pytest.mark.parametrize("seed", range(8))
    def test_local_symplectic_invariance(self, seed):
        rng = np.random.RandomState(seed)
        V = two_mode_squeezed(rng.uniform(0.1, 1.0)).V + rng.uniform(0.0, 0.3) * np.eye(4)
        S = np.zeros((4, 4))
        S[:2, :2] = random_single_mode_symplectic(rng)
        S[2:, 2:] = random_single_mode_symplectic(rng)
        np.testing.assert_allclose(S @ sigma(2) @ S.T, sigma(2), atol=1e-12)
        W = S @ V @ S.T
        assert log_negativity(W) == pytest.approx(log_negativity(V), abs=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_purity_global_symplectic_invariance(self, seed):
        rng = np.random.RandomState(50 + seed)
        X = rng.randn(4, 4)
        H = X + X.T
        # exp(Sigma H) is symplectic for symmetric H
        S = expm(0.1 * sigma(2) @ H)
        V = 0.8 * np.eye(4)
        assert purity(S @ V @ S.T) == pytest.approx(purity(V), rel=1e-9)

    def test_product_states_separable(self):
        rng = np.random.RandomState(7)
        for _ in range(5):
            V1 = random_single_mode_symplectic(rng)
            V3 = random_single_mode_symplectic(rng)
            V = np.zeros((4, 4))
            V[:2, :2] = 0.6 * V1 @ V1.T
            V[2:, 2:] = 0.7 * V3 @ V3.T
            assert log_negativity(V) == 0.0


class TestPurity:
    def test_vacuum_pure(self):
        assert purity(0.5 * np.eye(4)) == pytest.approx(1.0)

    def test_scaled_identity(self):
        assert purity(2 * np.eye(4)) == pytest.approx(1 / 16)

    def test_single_mode(self):
        assert purity(0.5 * np.eye(2)) == pytest.approx(1.0)

    def test_non_positive_determinant(self):
        with pytest.raises(UnphysicalCovarianceError):
            purity(np.diag([1.0, 1.0, 1.0, 0.0]))


class TestRecord:
    def test_matches_individual_metrics(self):
        V = two_mode_squeezed(0.4).V + 0.1 * np.eye(4)
        rec = entanglement_record(V)
        assert rec.delta_tilde == pytest.approx(delta_tilde(block_partition(V)))
        assert rec.det_v == pytest.approx(np.linalg.det(V))
        assert rec.nu == pytest.approx(min_symplectic_eigenvalue(V))
        assert rec.log_negativity == pytest.approx(log_negativity(V))
        assert rec.purity == pytest.approx(purity(V))

    def test_invariants_form(self):
        V = two_mode_squeezed(0.8)
        rec = entanglement_record(V)
        assert log_negativity_from_invariants(rec.delta_tilde, rec.det_v) == pytest.approx(1.6, abs=1e-9)

    def test_invariants_clamp_outside_region(self):
        # det V above the physical boundary for this delta_tilde
        with pytest.raises(UnphysicalCovarianceError):
            log_negativity_from_invariants(1.0, 4.0)
        en = log_negativity_from_invariants(1.0, 4.0, clamp=True)
        assert math.isfinite(en) and en >= 0.0


class TestTransitions:
    def test_constant_zero(self):
        assert detect_transitions(np.arange(6.0), np.zeros(6)) == []

    def test_birth_then_death(self):
        events = detect_transitions(np.arange(6.0), [0, 0, 0.3, 0.3, 0, 0])
        assert [e.kind for e in events] == [TransitionKind.BIRTH, TransitionKind.DEATH]
        assert 1.0 < events[0].time < 2.0
        assert 3.0 < events[1].time < 4.0

    def test_interpolates_crossing(self):
        events = detect_transitions([0.0, 1.0, 2.0], [0.4, 0.2, 0.0])
        assert len(events) == 1
        assert events[0].kind is TransitionKind.DEATH
        assert events[0].time == pytest.approx(2.0, abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            detect_transitions([0.0, 1.0], [0.0])
