"""Moment dynamics, steady states and feedback design for linear networks.

Time is in units of 1/kappa throughout.
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from network.slh_algebra import DriftDiffusion
from shared.errors import (
    DimensionError,
    DivergenceError,
    NoSteadyStateError,
    RiccatiSolverError,
)
from shared.gaussian_core import CovarianceMatrix, MeanVector, as_array, sigma, symmetrize

logger = logging.getLogger(__name__)

STABILITY_TOL = 1e-8
RICCATI_TOL = 1e-10
DEFAULT_DT = 1e-3
DEFAULT_T_END = 20.0


class Stability(enum.Enum):
    STABLE = "Stable"
    MARGINAL = "Marginal"
    UNSTABLE = "Unstable"


@dataclass(frozen=True, slots=True, eq=False)
class StabilityClass:
    kind: Stability
    eigenvalues: np.ndarray

    @property
    def is_hurwitz(self) -> bool:
        return self.kind is Stability.STABLE

    @property
    def max_real_part(self) -> float:
        return float(np.max(self.eigenvalues.real))


@dataclass(frozen=True, slots=True, eq=False)
class Trajectory:
    """Sampled solution of a moment equation.

    covariances has shape (K, n, n), means (K, n) and feedback (K, n) when
    the time-variant law was used. Absent series are None.
    """
    times: np.ndarray
    covariances: np.ndarray | None = None
    means: np.ndarray | None = None
    feedback: np.ndarray | None = None

    def __len__(self) -> int:
        return self.times.size

    @property
    def final_covariance(self) -> np.ndarray:
        if self.covariances is None:
            raise ValueError("trajectory carries no covariances")
        return self.covariances[-1]

    def covariance(self, index: int) -> CovarianceMatrix:
        """Sample as a CovarianceMatrix (quantum modes only, even dimension)."""
        if self.covariances is None:
            raise ValueError("trajectory carries no covariances")
        return CovarianceMatrix(self.covariances[index])

    def mean(self, index: int) -> MeanVector:
        if self.means is None:
            raise ValueError("trajectory carries no means")
        return MeanVector(self.means[index])


@dataclass(frozen=True, slots=True, eq=False)
class RiccatiSolution:
    """Stabilizing solution of R(V) = 0 and the coefficient vector it induces."""
    V: CovarianceMatrix
    residual: float
    f_bar: np.ndarray
    iterations: int
    residual_history: tuple[float, ...] = ()

    @property
    def det(self) -> float:
        return self.V.det


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _step_grid(t_end: float, dt: float) -> tuple[int, float]:
    """Number of RK4 steps and the (possibly shortened) step hitting t_end exactly."""
    if not dt > 0 or not np.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    if t_end < 0 or not np.isfinite(t_end):
        raise ValueError(f"t_end must be non-negative and finite, got {t_end}")
    if t_end == 0:
        return 0, dt
    n = max(1, int(round(t_end / dt)))
    return n, t_end / n


def _rk4(
    rhs: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    t_end: float,
    dt: float,
    stride: int,
    post: Callable[[np.ndarray], np.ndarray] | None = None,
    record: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Classical fixed-step RK4 for an autonomous ODE dx/dt = rhs(x).

    Returns sample times, samples and optional per-sample extras from record().
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n_steps, h = _step_grid(t_end, dt)
    logger.debug("RK4: %d steps of %.3g up to t=%.6g (stride %d)", n_steps, h, t_end, stride)

    x = np.array(x0, dtype=np.float64)
    times = [0.0]
    samples = [x.copy()]
    extras = [record(x)] if record else None

    for k in range(1, n_steps + 1):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if post is not None:
            x = post(x)
        t = k * h
        if not np.all(np.isfinite(x)):
            raise DivergenceError(t)
        if k % stride == 0 or k == n_steps:
            times.append(t)
            samples.append(x.copy())
            if extras is not None:
                extras.append(record(x))

    return (
        np.array(times),
        np.array(samples),
        np.array(extras) if extras is not None else None,
    )


def _check_square(A: np.ndarray, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got {A.shape}")
    return A


def _initial_covariance(V0: CovarianceMatrix | np.ndarray, dim: int) -> np.ndarray:
    V = as_array(V0)
    if V.shape != (dim, dim):
        raise DimensionError(f"V0 must be {dim}x{dim}, got {V.shape}")
    if np.max(np.abs(V - V.T)) > 1e-10 * max(1.0, float(np.max(np.abs(V)))):
        raise DimensionError("V0 must be symmetric")
    return symmetrize(V)


def propagate_lyapunov(
    dd: DriftDiffusion,
    V0: CovarianceMatrix | np.ndarray,
    t_end: float = DEFAULT_T_END,
    dt: float = DEFAULT_DT,
    stride: int = 1,
) -> Trajectory:
    """Integrate dV/dt = A V + V A^T + D with RK4, symmetrizing after every step.

    Args:
        dd: Drift and diffusion matrices.
        V0: Initial covariance (any square dimension matching dd).
        t_end: Final time; the step is shortened slightly if t_end/dt is not integral.
        dt: Step size.
        stride: Keep every stride-th step (the final step is always kept).

    Returns:
        Trajectory with covariances of shape (K, n, n).
    """
    A, D = dd.A, dd.D
    V = _initial_covariance(V0, dd.dim)

    def rhs(X: np.ndarray) -> np.ndarray:
        AX = A @ X
        return AX + AX.T + D

    times, covs, _ = _rk4(rhs, V, t_end, dt, stride, post=symmetrize)
    return Trajectory(times=times, covariances=covs)


def propagate_mean(
    A: np.ndarray,
    m0: MeanVector | np.ndarray,
    t_end: float = DEFAULT_T_END,
    dt: float = DEFAULT_DT,
    stride: int = 1,
) -> Trajectory:
    """Integrate d<x>/dt = A <x> with RK4."""
    A = _check_square(A)
    m = m0.values if isinstance(m0, MeanVector) else np.asarray(m0, dtype=np.float64).reshape(-1)
    if m.size != A.shape[0]:
        raise DimensionError(f"mean needs {A.shape[0]} entries, got {m.size}")
    times, means, _ = _rk4(lambda x: A @ x, m, t_end, dt, stride)
    return Trajectory(times=times, means=means)


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------

def stability_class(A: np.ndarray, tol: float = STABILITY_TOL) -> StabilityClass:
    """Classify A by the real parts of its eigenvalues."""
    A = _check_square(A)
    eig = scipy.linalg.eigvals(A)
    max_re = float(np.max(eig.real)) if eig.size else -np.inf
    if max_re < -tol:
        kind = Stability.STABLE
    elif max_re <= tol:
        kind = Stability.MARGINAL
    else:
        kind = Stability.UNSTABLE
    return StabilityClass(kind=kind, eigenvalues=eig)


def _kron_lyapunov(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    # Row-major vec: vec(A V) = (A kron I) vec V, vec(V A^T) = (I kron A) vec V
    n = A.shape[0]
    eye = np.eye(n)
    K = np.kron(A, eye) + np.kron(eye, A)
    v = np.linalg.solve(K, -D.reshape(-1))
    return symmetrize(v.reshape(n, n))


def steady_lyapunov(dd: DriftDiffusion, tol: float = STABILITY_TOL) -> np.ndarray:
    """Unique solution of A V + V A^T + D = 0 for Hurwitz A.

    Raises:
        NoSteadyStateError: A is marginal or unstable.
    """
    stab = stability_class(dd.A, tol)
    if not stab.is_hurwitz:
        raise NoSteadyStateError(stab)
    return _kron_lyapunov(dd.A, dd.D)


def lyapunov_residual(dd: DriftDiffusion, V: np.ndarray) -> float:
    V = as_array(V)
    AV = dd.A @ V
    return float(np.max(np.abs(AV + AV.T + dd.D)))


# ---------------------------------------------------------------------------
# Feedback design
# ---------------------------------------------------------------------------

def _riccati_terms(
    A_o: np.ndarray, D_o: np.ndarray, ell: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """A' = A_o + 2 s r^T, Q = D_o - s s^T, R' = 4 r r^T with r = Re(l), s = Sigma Im(l)."""
    A_o = _check_square(A_o, "A_o")
    D_o = _check_square(D_o, "D_o")
    ell = np.asarray(ell, dtype=np.complex128).reshape(-1)
    n = A_o.shape[0]
    if D_o.shape != A_o.shape or ell.size != n or n % 2:
        raise DimensionError(
            f"inconsistent Riccati data: A_o {A_o.shape}, D_o {D_o.shape}, l {ell.shape}"
        )
    r = ell.real
    s = sigma(n // 2) @ ell.imag
    A_p = A_o + 2.0 * np.outer(s, r)
    Q = D_o - np.outer(s, s)
    R_p = 4.0 * np.outer(r, r)
    return A_p, Q, R_p, r, s


def riccati_residual(
    A_o: np.ndarray, D_o: np.ndarray, ell: np.ndarray, V: CovarianceMatrix | np.ndarray
) -> np.ndarray:
    """R(V) = A_o V + V A_o^T + D_o - (2 V Re(l) - Sigma Im(l))(2 V Re(l) - Sigma Im(l))^T."""
    A_o = _check_square(A_o, "A_o")
    V = as_array(V)
    ell = np.asarray(ell, dtype=np.complex128).reshape(-1)
    u = 2.0 * V @ ell.real - sigma(V.shape[0] // 2) @ ell.imag
    AV = A_o @ V
    return AV + AV.T + D_o - np.outer(u, u)


def design_feedback(V: CovarianceMatrix | np.ndarray, ell: np.ndarray) -> np.ndarray:
    """f = 2 Sigma V Re(l) + Im(l)."""
    V = as_array(V)
    ell = np.asarray(ell, dtype=np.complex128).reshape(-1)
    if V.shape != (ell.size, ell.size):
        raise DimensionError(f"V {V.shape} does not match coupling vector of size {ell.size}")
    return 2.0 * sigma(ell.size // 2) @ V @ ell.real + ell.imag


def _care_guess(A_p: np.ndarray, Q: np.ndarray, r: np.ndarray) -> np.ndarray | None:
    # scipy solves a^T X + X a - X b b^T X + q = 0; a = A'^T maps it onto R(V) = 0
    try:
        X = scipy.linalg.solve_continuous_are(A_p.T, 2.0 * r[:, None], Q, np.eye(1))
    except (np.linalg.LinAlgError, ValueError) as exc:
        logger.debug("Schur-based CARE initial guess failed: %s", exc)
        return None
    if not np.all(np.isfinite(X)):
        return None
    return symmetrize(X)


def _newton_kleinman(
    V: np.ndarray,
    A_p: np.ndarray,
    Q: np.ndarray,
    R_p: np.ndarray,
    tol: float,
    max_iter: int,
    history: list[float],
) -> tuple[np.ndarray, int] | None:
    """Newton iteration from a stabilizing V; None if stability is lost or no convergence."""
    for it in range(max_iter + 1):
        AV = A_p @ V
        F = AV + AV.T + Q - V @ R_p @ V
        res = float(np.max(np.abs(F)))
        history.append(res)
        logger.debug("Riccati Newton iteration %d: residual %.3e", it, res)
        if res <= tol:
            return V, it
        A_k = A_p - V @ R_p
        if not stability_class(A_k).is_hurwitz:
            logger.debug("Newton iterate %d lost closed-loop stability", it)
            return None
        # A_k dV + dV A_k^T = -F
        dV = scipy.linalg.solve_continuous_lyapunov(A_k, -F)
        V = symmetrize(V + dV)
        if not np.all(np.isfinite(V)):
            return None
    return None


def _riccati_flow(
    A_o: np.ndarray,
    D_o: np.ndarray,
    ell: np.ndarray,
    t_end: float = 100.0,
    dt: float = 1e-3,
) -> np.ndarray:
    n = A_o.shape[0]
    traj = propagate_time_variant(A_o, D_o, ell, 2.0 * np.eye(n), t_end=t_end, dt=dt, stride=1000)
    return traj.final_covariance


def solve_riccati(
    A_o: np.ndarray,
    D_o: np.ndarray,
    ell: np.ndarray,
    tol: float = RICCATI_TOL,
    max_iter: int = 50,
    shifts: Sequence[float] = (0.5, 1.0, 2.0, 5.0, 10.0, 50.0),
) -> RiccatiSolution:
    """Stabilizing solution of R(V) = 0 by Newton-Kleinman.

    Initial guesses are tried in order: the Schur-method CARE solution,
    then rho * I for each rho in shifts whose closed loop A' - rho R' is
    Hurwitz, then the end point of the Riccati flow dV/dt = R(V) from 2I.

    Raises:
        RiccatiSolverError: No candidate converged to tol.
    """
    A_p, Q, R_p, r, _ = _riccati_terms(A_o, D_o, ell)
    if not np.any(r):
        raise RiccatiSolverError([], "Re(l) = 0: measurement carries no information")
    n = A_p.shape[0]

    def candidates():
        guess = _care_guess(A_p, Q, r)
        if guess is not None:
            yield "care", guess
        for rho in shifts:
            if stability_class(A_p - rho * R_p).is_hurwitz:
                yield f"shift {rho:g}", rho * np.eye(n)
        logger.warning("Riccati initial guesses failed, falling back to Riccati flow")
        yield "flow", _riccati_flow(A_o, D_o, ell)

    history: list[float] = []
    for label, V0 in candidates():
        if not stability_class(A_p - V0 @ R_p).is_hurwitz:
            logger.debug("Riccati guess '%s' is not stabilizing", label)
            continue
        result = _newton_kleinman(V0, A_p, Q, R_p, tol, max_iter, history)
        if result is None:
            continue
        V, iterations = result
        logger.debug("Riccati solved from '%s' guess in %d iterations", label, iterations)
        return RiccatiSolution(
            V=CovarianceMatrix(V),
            residual=history[-1],
            f_bar=design_feedback(V, ell),
            iterations=iterations,
            residual_history=tuple(history),
        )
    raise RiccatiSolverError(history)


def propagate_time_variant(
    A_o: np.ndarray,
    D_o: np.ndarray,
    ell: np.ndarray,
    V0: CovarianceMatrix | np.ndarray,
    t_end: float = DEFAULT_T_END,
    dt: float = DEFAULT_DT,
    stride: int = 1,
) -> Trajectory:
    """Closed loop under the time-variant law f = f_t at g = 1.

    With f re-chosen every instant the non-negative feedback term of the
    controlled Lyapunov equation vanishes and dV/dt = R(V). The trajectory
    records f_t alongside V_t.
    """
    A_o = _check_square(A_o, "A_o")
    ell = np.asarray(ell, dtype=np.complex128).reshape(-1)
    V = _initial_covariance(V0, A_o.shape[0])
    times, covs, fs = _rk4(
        lambda X: riccati_residual(A_o, D_o, ell, X),
        V,
        t_end,
        dt,
        stride,
        post=symmetrize,
        record=lambda X: design_feedback(X, ell),
    )
    return Trajectory(times=times, covariances=covs, feedback=fs)
