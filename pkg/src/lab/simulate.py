"""Covariance simulations and steady-state analysis driven by a RunConfig.

Usage:
    qfb-lab simulate --cavity1 dispersive --cavity2 damped --v0 2 --t-end 20
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lab.config import RunConfig
from lab.csv_output import TRAJECTORY_FIELDS, TrajectoryRow, render_csv, write_csv
from network.dynamics import (
    RiccatiSolution,
    StabilityClass,
    Trajectory,
    propagate_lyapunov,
    stability_class,
    steady_lyapunov,
)
from network.entanglement import (
    EntanglementRecord,
    Transition,
    detect_transitions,
    entanglement_record,
)
from network.models import build_ideal, build_realistic, design_ideal_feedback
from network.slh_algebra import DriftDiffusion
from shared.errors import NoSteadyStateError, UnphysicalCovarianceError
from shared.gaussian_core import CovarianceMatrix, is_physical

logger = logging.getLogger(__name__)

EMIT_PHYSICALITY_TOL = 1e-8


@dataclass(slots=True)
class SimulationResult:
    """Trajectory of a run plus per-sample entanglement metrics."""
    config: RunConfig
    f: np.ndarray
    trajectory: Trajectory
    rows: list[TrajectoryRow] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def log_negativity(self) -> np.ndarray:
        return np.array([r.log_negativity for r in self.rows])

    @property
    def purity(self) -> np.ndarray:
        return np.array([r.purity for r in self.rows])

    @property
    def max_log_negativity(self) -> float:
        return float(np.max(self.log_negativity))

    def transitions(self) -> list[Transition]:
        return detect_transitions(self.times, self.log_negativity)


@dataclass(slots=True)
class SteadyResult:
    config: RunConfig
    f: np.ndarray
    stability: StabilityClass
    covariance: CovarianceMatrix | None = None   # cavity block, None without a steady state
    record: EntanglementRecord | None = None

    @property
    def status(self) -> str:
        if self.covariance is not None:
            return "steady"
        return self.stability.kind.value.lower()


def resolve_feedback(cfg: RunConfig) -> tuple[np.ndarray, RiccatiSolution | None]:
    """Feedback vector of a run; f = riccati designs it on the ideal uncontrolled network."""
    if cfg.f != "riccati":
        return np.array(cfg.f, dtype=np.float64), None
    ideal = cfg.model_copy(update={"network": "ideal"})
    solution = design_ideal_feedback(ideal.network_params(f=np.zeros(4)))
    logger.info("Riccati design: f = %s, det V = %.6g", np.round(solution.f_bar, 4), solution.det)
    return solution.f_bar, solution


def drift_diffusion_for(cfg: RunConfig, f: np.ndarray, check_dual: bool = False) -> DriftDiffusion:
    params = cfg.network_params(f=f)
    if cfg.network == "realistic":
        return build_realistic(params, check_dual=check_dual)
    return build_ideal(params, check_dual=check_dual)


def cavity_block(V: np.ndarray) -> np.ndarray:
    """4x4 cavity covariance (the detector coordinate traced out)."""
    return np.asarray(V)[:4, :4]


def initial_covariance(cfg: RunConfig) -> np.ndarray:
    """V0 of a run, rejected if the cavity state violates the uncertainty principle."""
    V0 = cfg.initial_covariance()
    if np.max(np.abs(V0 - V0.T)) > 1e-10:
        raise UnphysicalCovarianceError("V0 is not symmetric")
    if not is_physical(cavity_block(V0)):
        raise UnphysicalCovarianceError("V0 violates the uncertainty principle")
    if cfg.dim == 5 and np.min(np.linalg.eigvalsh(V0)) < 0:
        raise UnphysicalCovarianceError("V0 is not positive semidefinite")
    return V0


def _row(t: float, V: np.ndarray) -> TrajectoryRow:
    block = cavity_block(V)
    if not is_physical(block, EMIT_PHYSICALITY_TOL):
        raise UnphysicalCovarianceError(f"cavity covariance at t={t:.6g} violates the uncertainty principle")
    rec = entanglement_record(block)
    return TrajectoryRow(
        t=float(t),
        log_negativity=rec.log_negativity,
        purity=rec.purity,
        delta_tilde=rec.delta_tilde,
        det_v=rec.det_v,
        covariance=block.copy(),
    )


def run_simulation(
    cfg: RunConfig,
    check_dual: bool = False,
    f: np.ndarray | None = None,
) -> SimulationResult:
    """Propagate the configured network from V0 and evaluate every kept sample."""
    V0 = initial_covariance(cfg)
    if f is None:
        f, _ = resolve_feedback(cfg)
    dd = drift_diffusion_for(cfg, f, check_dual)
    logger.debug("Simulating %s network to t=%g (dt=%g)", cfg.network, cfg.t_end, cfg.dt)
    traj = propagate_lyapunov(dd, V0, t_end=cfg.t_end, dt=cfg.dt, stride=cfg.stride)
    rows = [_row(t, V) for t, V in zip(traj.times, traj.covariances)]
    return SimulationResult(config=cfg, f=np.asarray(f), trajectory=traj, rows=rows)


def evaluate_steady(
    cfg: RunConfig,
    check_dual: bool = False,
    f: np.ndarray | None = None,
) -> SteadyResult:
    """Steady cavity state; a non-Hurwitz closed loop yields a result without covariance."""
    if f is None:
        f, _ = resolve_feedback(cfg)
    dd = drift_diffusion_for(cfg, f, check_dual)
    stab = stability_class(dd.A)
    if not stab.is_hurwitz:
        logger.debug("No steady state: closed loop is %s", stab.kind.value)
        return SteadyResult(config=cfg, f=np.asarray(f), stability=stab)
    V = steady_lyapunov(dd)
    block = CovarianceMatrix(cavity_block(V))
    return SteadyResult(
        config=cfg,
        f=np.asarray(f),
        stability=stab,
        covariance=block,
        record=entanglement_record(block),
    )


def steady_state(cfg: RunConfig, check_dual: bool = False, f: np.ndarray | None = None) -> SteadyResult:
    """Like evaluate_steady, but raises NoSteadyStateError for marginal or unstable loops."""
    result = evaluate_steady(cfg, check_dual, f)
    if result.covariance is None:
        raise NoSteadyStateError(result.stability)
    return result


def trajectory_csv(result: SimulationResult, log2: bool = False) -> str:
    return render_csv(TRAJECTORY_FIELDS, (r.to_row(log2) for r in result.rows))


def save_trajectory(result: SimulationResult, output_path: Path, log2: bool = False) -> Path:
    """Save a trajectory as CSV."""
    return write_csv(output_path, TRAJECTORY_FIELDS, (r.to_row(log2) for r in result.rows))
