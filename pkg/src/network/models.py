"""Cavity, beam-splitter and detector components and the two feedback networks.

Both networks are available in closed form and as a cascade built with
slh_algebra; build_ideal/build_realistic can cross-check the two.

Ideal:      F <| C2 <| C1, feedback on the single output channel.
Realistic:  F <| D <| C2 <| B <| C1 on three channels:
            0 carries the cavity output into the detector,
            1 is the beam-splitter loss port,
            2 is the detector noise channel (variance a4) used by the feedback.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from network.dynamics import RiccatiSolution, solve_riccati
from network.slh_algebra import (
    DriftDiffusion,
    LinearSLH,
    drift_diffusion,
    feedback_close,
    pad,
    reduce_drift_diffusion,
    series,
    strip_scattering,
)
from shared.errors import ConfigurationError, ConsistencyError, DimensionError
from shared.gaussian_core import SIGMA, CovarianceMatrix, as_array

logger = logging.getLogger(__name__)

DUAL_TOL = 1e-10
# Realistic cascade coordinates (q1, p1, q2, p2, q3, p3); p3 never feeds back.
REALISTIC_KEEP = (0, 1, 2, 3, 4)


class CavityKind(enum.Enum):
    DAMPED = "damped"
    DISPERSIVE = "dispersive"


@dataclass(frozen=True, slots=True)
class CavityParams:
    m: float = 0.2                           # asymmetry of H = (m q^2 + p^2) / 2
    kappa: float = 1.0                       # coupling rate
    kind: CavityKind = CavityKind.DAMPED

    def __post_init__(self):
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ConfigurationError(f"m must be positive, got {self.m}")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}")
        if not isinstance(self.kind, CavityKind):
            object.__setattr__(self, "kind", CavityKind(self.kind))

    @property
    def coupling(self) -> np.ndarray:
        """l with L = l^T x."""
        k = math.sqrt(self.kappa)
        if self.kind is CavityKind.DAMPED:
            return np.array([k, 1j * k])
        return np.array([k, 0.0], dtype=np.complex128)

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag([self.m, 1.0])


@dataclass(frozen=True, slots=True)
class DetectorParams:
    """Linear detector model

        d xi = a1 xi dt + a2 (dB1' + dB1'*),   output  xi a3 dt + dB3

    with the output noise channel of variance a4.
    """
    tau: float
    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        if not (self.a4 > 0 and math.isfinite(self.a4)):
            raise ConfigurationError(f"a4 must be positive, got {self.a4}")

    @classmethod
    def low_pass(cls, tau: float, a4: float) -> DetectorParams:
        """First-order low-pass filter with time constant tau."""
        if not tau > 0:
            raise ConfigurationError(f"tau must be positive, got {tau}")
        return cls(tau=tau, a1=-1.0 / tau, a2=1.0 / tau, a3=1.0, a4=a4)


@dataclass(frozen=True, slots=True)
class NetworkParams:
    cavity1: CavityParams
    cavity2: CavityParams
    g: float = 0.0
    f: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    alpha: float = 1.0                       # beam-splitter transmittance
    detector: DetectorParams | None = None   # realistic network only

    def __post_init__(self):
        f = tuple(float(x) for x in np.asarray(self.f, dtype=np.float64).reshape(-1))
        if len(f) != 4:
            raise ConfigurationError(f"f must have 4 entries, got {len(f)}")
        object.__setattr__(self, "f", f)
        if not math.isfinite(self.g) or not all(math.isfinite(x) for x in f):
            raise ConfigurationError("g and f must be finite")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must be in (0, 1], got {self.alpha}")

    @property
    def f_vector(self) -> np.ndarray:
        return np.array(self.f)

    @property
    def coupling(self) -> np.ndarray:
        """Stacked (l1, l2) used by the feedback design."""
        return np.concatenate([self.cavity1.coupling, self.cavity2.coupling])

    def with_feedback(self, g: float, f) -> NetworkParams:
        return NetworkParams(
            cavity1=self.cavity1, cavity2=self.cavity2, g=g, f=tuple(f),
            alpha=self.alpha, detector=self.detector,
        )


@dataclass(frozen=True, slots=True)
class DpaParams:
    """Degenerate parametric amplifier: detuning, pump intensity and pump phase."""
    detuning: float
    pump: float
    phase: float = 0.0


# ---------------------------------------------------------------------------
# Components
# ---------------------------------------------------------------------------

def cavity_slh(p: CavityParams) -> LinearSLH:
    return LinearSLH(S=np.eye(1), L=p.coupling[None, :], G=p.hamiltonian)


def dpa_parameters(m: float) -> DpaParams:
    """DPA settings realizing H = (m q^2 + p^2) / 2."""
    if not m > 0:
        raise ConfigurationError(f"m must be positive, got {m}")
    return DpaParams(detuning=(1.0 + m) / 2.0, pump=(1.0 - m) / 2.0, phase=0.0)


def dpa_hamiltonian_matrix(p: DpaParams) -> np.ndarray:
    """G of H = Delta a*a - (eps/2)(e^{i phi} a*^2 + e^{-i phi} a^2), constants dropped.

    The pump phase is measured from the q axis, so phi = 0 squeezes p.
    """
    c, s = math.cos(p.phase), math.sin(p.phase)
    return np.array([
        [p.detuning - p.pump * c, -p.pump * s],
        [-p.pump * s, p.detuning + p.pump * c],
    ])


def detector_slh(p: DetectorParams) -> LinearSLH:
    """Detector as a one-mode, three-channel triple.

    H = (a1/2)(q p + p q), L on channel 0 = -i a2 p, L on channel 2 = (a3 / 2 a4) q.
    """
    if not p.a4 > 0:
        raise ConfigurationError(f"a4 must be positive, got {p.a4}")
    L = np.zeros((3, 2), dtype=np.complex128)
    L[0, 1] = -1j * p.a2
    L[2, 0] = p.a3 / (2.0 * p.a4)
    G = np.array([[0.0, p.a1], [p.a1, 0.0]])
    return LinearSLH(S=np.eye(3), L=L, G=G)


def beam_splitter_slh(alpha: float) -> LinearSLH:
    """Lossy link between the cavities: transmits alpha, diverts sqrt(1 - alpha^2) to channel 1."""
    if not 0 < alpha <= 1:
        raise ConfigurationError(f"alpha must be in (0, 1], got {alpha}")
    beta = math.sqrt(1.0 - alpha * alpha)
    S = np.array([[alpha, -beta, 0.0], [beta, alpha, 0.0], [0.0, 0.0, 1.0]])
    return LinearSLH(S=S, L=np.zeros((3, 0)), G=np.zeros((0, 0)))


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _single(c: CavityParams) -> tuple[np.ndarray, np.ndarray]:
    ell = c.coupling
    P = np.outer(ell.conj(), ell)
    return SIGMA @ (c.hamiltonian + P.imag), SIGMA @ P.real @ SIGMA.T


def uncontrolled_ideal(p: NetworkParams) -> DriftDiffusion:
    """(A_o, D_o) of C2 <| C1 without feedback."""
    l1, l2 = p.cavity1.coupling, p.cavity2.coupling
    A1, D1 = _single(p.cavity1)
    A2, D2 = _single(p.cavity2)
    cross = np.outer(l2.conj(), l1)
    Z = np.zeros((2, 2))
    D21 = SIGMA @ cross.real @ SIGMA.T
    A = np.block([[A1, Z], [2.0 * SIGMA @ cross.imag, A2]])
    D = np.block([[D1, D21.T], [D21, D2]])
    return DriftDiffusion(A=A, D=D)


def ideal_closed_form(p: NetworkParams) -> DriftDiffusion:
    """A_id = A_o + 2 g Sigma f Re(l)^T,
    D_id = D_o + Sigma [g^2 f f^T - g Im(l) f^T - g f Im(l)^T] Sigma^T.
    """
    dd = uncontrolled_ideal(p)
    ell = p.coupling
    f, g = p.f_vector, p.g
    sig = np.kron(np.eye(2), SIGMA)
    A = dd.A + 2.0 * g * sig @ np.outer(f, ell.real)
    inner = g * g * np.outer(f, f) - g * np.outer(ell.imag, f) - g * np.outer(f, ell.imag)
    D = dd.D + sig @ inner @ sig.T
    return DriftDiffusion(A=A, D=D)


def _require_detector(p: NetworkParams) -> DetectorParams:
    if p.detector is None:
        raise ConfigurationError("the realistic network needs detector parameters (tau, a4)")
    return p.detector


def realistic_closed_form(p: NetworkParams) -> DriftDiffusion:
    """5x5 (A_re, D_re) on (q1, p1, q2, p2, xi)."""
    det = _require_detector(p)
    a1, a2, a3, a4 = det.a1, det.a2, det.a3, det.a4
    l1, l2 = p.cavity1.coupling, p.cavity2.coupling
    f1, f2 = p.f_vector[:2], p.f_vector[2:]
    g, alpha = p.g, p.alpha
    A1, D1 = _single(p.cavity1)
    A2, D2 = _single(p.cavity2)
    cross = np.outer(l2.conj(), l1)

    A = np.zeros((5, 5))
    A[0:2, 0:2] = A1
    A[2:4, 0:2] = 2.0 * alpha * SIGMA @ cross.imag
    A[2:4, 2:4] = A2
    A[0:2, 4] = g * a3 * SIGMA @ f1
    A[2:4, 4] = g * a3 * SIGMA @ f2
    A[4, 0:2] = 2.0 * alpha * a2 * l1.real
    A[4, 2:4] = 2.0 * a2 * l2.real
    A[4, 4] = a1

    D = np.zeros((5, 5))
    D[0:2, 0:2] = D1
    D[2:4, 2:4] = D2
    D21 = alpha * SIGMA @ cross.real @ SIGMA.T
    D[2:4, 0:2] = D21
    D[0:2, 2:4] = D21.T
    D[4, 0:2] = -alpha * a2 * SIGMA @ l1.imag
    D[4, 2:4] = -a2 * SIGMA @ l2.imag
    D[0:4, 4] = D[4, 0:4]
    D[4, 4] = a2 * a2
    sf = np.kron(np.eye(2), SIGMA) @ p.f_vector
    D[0:4, 0:4] += g * g * a4 * np.outer(sf, sf)
    return DriftDiffusion(A=A, D=D)


# ---------------------------------------------------------------------------
# Cascade constructions
# ---------------------------------------------------------------------------

def ideal_cascade(p: NetworkParams) -> DriftDiffusion:
    """F <| C2 <| C1 through the series product."""
    c1 = pad(cavity_slh(p.cavity1), 1, n_modes=2, mode_offset=0)
    c2 = pad(cavity_slh(p.cavity2), 1, n_modes=2, mode_offset=1)
    chain = feedback_close(series(c2, c1), p.f_vector, p.g, channel=0)
    return drift_diffusion(chain)


def realistic_cascade_full(p: NetworkParams) -> DriftDiffusion:
    """6x6 drift/diffusion of F <| D <| C2 <| B <| C1 after stripping S."""
    det = _require_detector(p)
    weights = (1.0, 1.0, det.a4)
    c1 = pad(cavity_slh(p.cavity1), 3, [0], n_modes=3, mode_offset=0)
    bs = pad(beam_splitter_slh(p.alpha), 3, n_modes=3)
    c2 = pad(cavity_slh(p.cavity2), 3, [0], n_modes=3, mode_offset=1)
    dt = pad(detector_slh(det), 3, n_modes=3, mode_offset=2)

    chain = series(bs, c1, weights)
    chain = series(c2, chain, weights)
    chain = series(dt, chain, weights)
    f = np.concatenate([p.f_vector, np.zeros(2)])
    chain = feedback_close(chain, f, p.g, channel=2, noise_weights=weights)
    return drift_diffusion(strip_scattering(chain), weights)


def realistic_cascade(p: NetworkParams) -> DriftDiffusion:
    return reduce_drift_diffusion(realistic_cascade_full(p), REALISTIC_KEEP)


def _check_dual(closed: DriftDiffusion, cascade: DriftDiffusion, label: str) -> None:
    err_a = float(np.max(np.abs(closed.A - cascade.A)))
    err_d = float(np.max(np.abs(closed.D - cascade.D)))
    scale = max(1.0, float(np.max(np.abs(closed.A))), float(np.max(np.abs(closed.D))))
    logger.debug("%s dual construction: |dA| %.3e, |dD| %.3e", label, err_a, err_d)
    if max(err_a, err_d) > DUAL_TOL * scale:
        raise ConsistencyError(
            f"{label} closed form and cascade disagree (|dA| {err_a:.3e}, |dD| {err_d:.3e})"
        )


def build_ideal(p: NetworkParams, check_dual: bool = False) -> DriftDiffusion:
    dd = ideal_closed_form(p)
    if check_dual:
        _check_dual(dd, ideal_cascade(p), "ideal")
    return dd


def build_realistic(p: NetworkParams, check_dual: bool = False) -> DriftDiffusion:
    dd = realistic_closed_form(p)
    if check_dual:
        _check_dual(dd, realistic_cascade(p), "realistic")
    return dd


def design_ideal_feedback(p: NetworkParams) -> RiccatiSolution:
    """Riccati design of f for the ideal network (the gain and f of p are ignored)."""
    dd = uncontrolled_ideal(p)
    return solve_riccati(dd.A, dd.D, p.coupling)


def reduce_cavity_covariance(V: CovarianceMatrix | np.ndarray) -> CovarianceMatrix:
    """Trace out the detector coordinate: top-left 4x4 block."""
    M = as_array(V)
    if M.shape != (5, 5):
        raise DimensionError(f"expected a 5x5 covariance, got {M.shape}")
    if np.max(np.abs(M - M.T)) > 1e-10 * max(1.0, float(np.max(np.abs(M)))):
        raise DimensionError("covariance is not symmetric")
    return CovarianceMatrix(M[:4, :4])


# ---------------------------------------------------------------------------
# Dispersive coupling from an auxiliary mode
# ---------------------------------------------------------------------------

def coupling_rate_for(kappa: float, gamma: float) -> float:
    """Gamma with 2 sqrt(2) Gamma = sqrt(kappa gamma)."""
    if not (kappa > 0 and gamma > 0):
        raise ConfigurationError("kappa and gamma must be positive")
    return math.sqrt(kappa * gamma) / (2.0 * math.sqrt(2.0))


def adiabatic_eliminate(Gamma: float, gamma: float) -> LinearSLH:
    """Effective one-mode triple after eliminating a fast auxiliary mode: l = (2 sqrt(2) Gamma / sqrt(gamma), 0)."""
    if not (Gamma > 0 and gamma > 0):
        raise ConfigurationError("Gamma and gamma must be positive")
    ell = np.array([[2.0 * math.sqrt(2.0) * Gamma / math.sqrt(gamma), 0.0]])
    return LinearSLH(S=np.eye(1), L=ell, G=np.zeros((2, 2)))


def dispersive_coupler_slh(Gamma: float, gamma: float) -> LinearSLH:
    """Unreduced model on (q_a, p_a, q_b, p_b): H = 2 Gamma q_a p_b, b damped at gamma.

    The output picks up a pi phase shift (S = -1).
    """
    if not (Gamma > 0 and gamma > 0):
        raise ConfigurationError("Gamma and gamma must be positive")
    G = np.zeros((4, 4))
    G[0, 3] = G[3, 0] = 2.0 * Gamma
    k = math.sqrt(gamma / 2.0)
    L = np.array([[0.0, 0.0, k, 1j * k]])
    return LinearSLH(S=-np.eye(1), L=L, G=G)
