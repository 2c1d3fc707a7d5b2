"""Entanglement and purity of two-mode Gaussian states."""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from shared.errors import DimensionError, UnphysicalCovarianceError
from shared.gaussian_core import CovarianceMatrix, TwoModeBlocks, as_array, block_partition

logger = logging.getLogger(__name__)

DISCRIMINANT_TOL = 1e-12
ZERO_FLOOR = 1e-12


@dataclass(frozen=True, slots=True)
class EntanglementRecord:
    delta_tilde: float
    det_v: float
    nu: float
    log_negativity: float
    purity: float


class TransitionKind(enum.Enum):
    BIRTH = "birth"
    DEATH = "death"


@dataclass(frozen=True, slots=True)
class Transition:
    time: float
    kind: TransitionKind


def delta_tilde(blocks: TwoModeBlocks) -> float:
    """det V1 + det V3 - 2 det V2."""
    return float(
        np.linalg.det(blocks.V1) + np.linalg.det(blocks.V3) - 2.0 * np.linalg.det(blocks.V2)
    )


def _two_mode(V: CovarianceMatrix | np.ndarray) -> np.ndarray:
    M = as_array(V)
    if M.shape != (4, 4):
        raise DimensionError(f"two-mode covariance must be 4x4, got {M.shape}")
    return M


def _nu_from_invariants(dt: float, det_v: float, tol: float, clamp: bool) -> float:
    scale = max(1.0, dt * dt)
    disc = dt * dt - 4.0 * det_v
    if disc < 0:
        if disc < -tol * scale and not clamp:
            raise UnphysicalCovarianceError(
                f"negative discriminant {disc:.3e} (delta_tilde={dt:.6g}, det V={det_v:.6g})"
            )
        disc = 0.0
    inner = dt - math.sqrt(disc)
    if inner < 0:
        if inner < -tol * max(1.0, abs(dt)) and not clamp:
            raise UnphysicalCovarianceError(f"negative symplectic argument {inner:.3e}")
        inner = 0.0
    return math.sqrt(inner / 2.0)


def min_symplectic_eigenvalue(V: CovarianceMatrix | np.ndarray, tol: float = DISCRIMINANT_TOL) -> float:
    """Smallest symplectic eigenvalue of the partial transpose of a two-mode V.

    nu = sqrt((delta_tilde - sqrt(delta_tilde^2 - 4 det V)) / 2). Roundoff
    below tol (relative to delta_tilde^2) is clamped; anything worse raises.
    """
    M = _two_mode(V)
    return _nu_from_invariants(delta_tilde(block_partition(M)), float(np.linalg.det(M)), tol, False)


def _log_negativity_from_nu(nu: float) -> float:
    if nu <= 0:
        raise UnphysicalCovarianceError("symplectic eigenvalue is zero")
    return max(0.0, -math.log(2.0 * nu))


def log_negativity(V: CovarianceMatrix | np.ndarray) -> float:
    """E_N = max(0, -ln(2 nu)), natural log."""
    return _log_negativity_from_nu(min_symplectic_eigenvalue(V))


def log_negativity_from_invariants(
    delta_tilde_value: float,
    det_v: float,
    tol: float = DISCRIMINANT_TOL,
    clamp: bool = False,
) -> float:
    """E_N as a function of the phase-plane coordinates (delta_tilde, det V).

    clamp=True maps points outside the physical region onto its boundary
    instead of raising, for evaluating E_N on a regular grid.
    """
    if det_v <= 0:
        raise UnphysicalCovarianceError(f"det V must be positive, got {det_v:.6g}")
    return _log_negativity_from_nu(_nu_from_invariants(delta_tilde_value, det_v, tol, clamp))


def purity(V: CovarianceMatrix | np.ndarray) -> float:
    """Tr(rho^2) = 1 / (2^N sqrt(det V)); 1/(4 sqrt(det V)) for two modes."""
    M = as_array(V)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise DimensionError(f"covariance must be 2N x 2N, got {M.shape}")
    det_v = float(np.linalg.det(M))
    if det_v <= 0:
        raise UnphysicalCovarianceError(f"det V must be positive, got {det_v:.6g}")
    return 1.0 / (2.0 ** (M.shape[0] // 2) * math.sqrt(det_v))


def entanglement_record(V: CovarianceMatrix | np.ndarray) -> EntanglementRecord:
    """All two-mode metrics in one pass."""
    M = _two_mode(V)
    dt = delta_tilde(block_partition(M))
    det_v = float(np.linalg.det(M))
    if det_v <= 0:
        raise UnphysicalCovarianceError(f"det V must be positive, got {det_v:.6g}")
    nu = _nu_from_invariants(dt, det_v, DISCRIMINANT_TOL, False)
    return EntanglementRecord(
        delta_tilde=dt,
        det_v=det_v,
        nu=nu,
        log_negativity=_log_negativity_from_nu(nu),
        purity=1.0 / (4.0 * math.sqrt(det_v)),
    )


def detect_transitions(
    times: Sequence[float] | np.ndarray,
    values: Sequence[float] | np.ndarray,
    floor: float = ZERO_FLOOR,
) -> list[Transition]:
    """Entanglement birth and death events along a sampled E_N series.

    A sample counts as entangled when E_N > floor. Event times are where the
    linear interpolant between the two bracketing samples crosses floor.
    """
    t = np.asarray(times, dtype=np.float64).reshape(-1)
    e = np.asarray(values, dtype=np.float64).reshape(-1)
    if t.size != e.size:
        raise DimensionError(f"{t.size} times for {e.size} values")

    events: list[Transition] = []
    entangled = e > floor
    for i in np.flatnonzero(entangled[1:] != entangled[:-1]):
        e0, e1 = e[i], e[i + 1]
        frac = (floor - e0) / (e1 - e0)
        tc = float(t[i] + frac * (t[i + 1] - t[i]))
        kind = TransitionKind.BIRTH if entangled[i + 1] else TransitionKind.DEATH
        events.append(Transition(time=tc, kind=kind))
    logger.debug("Detected %d entanglement transitions", len(events))
    return events
