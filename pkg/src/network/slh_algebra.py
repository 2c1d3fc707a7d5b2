"""Linear SLH triples and their composition rules.

A linear open quantum system on N modes driven by M bosonic channels is the
triple (S, L, G):
  S  M x M unitary scattering matrix
  L  M x 2N complex; row k holds L_k with L_k_hat = L_k^T x
  G  2N x 2N real symmetric; H_hat = x^T G x / 2

Everything here works on first/second-moment dynamics only. Scalar
commutator remainders from operator ordering are dropped: they shift H by a
constant and never reach the drift or diffusion.

Channel and mode indices are 0-based.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from shared.errors import (
    CompositionError,
    ConfigurationError,
    ConsistencyError,
    DimensionError,
)
from shared.gaussian_core import sigma, symmetrize

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-10
DECOUPLING_TOL = 1e-12


def _frozen(a: np.ndarray, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, slots=True, eq=False)
class LinearSLH:
    """(S, L, G) triple of a linear open system."""
    S: np.ndarray
    L: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.S, dtype=np.complex128))
        G = np.asarray(self.G, dtype=np.float64)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] % 2:
            raise DimensionError(f"G must be 2N x 2N, got {G.shape}")
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DimensionError(f"S must be square, got {S.shape}")
        L = np.asarray(self.L, dtype=np.complex128)
        if L.ndim == 1:
            L = L[None, :]
        if L.shape != (S.shape[0], G.shape[0]):
            raise DimensionError(
                f"L must be {S.shape[0]}x{G.shape[0]} (channels x quadratures), got {L.shape}"
            )
        if np.max(np.abs(G - G.T), initial=0.0) > UNITARITY_TOL:
            raise DimensionError("G must be symmetric")
        err = np.max(np.abs(S.conj().T @ S - np.eye(S.shape[0])), initial=0.0)
        if err > UNITARITY_TOL:
            raise ConfigurationError(f"S is not unitary (|S^H S - I| = {err:.3e})")
        object.__setattr__(self, "S", _frozen(S, np.complex128))
        object.__setattr__(self, "L", _frozen(L, np.complex128))
        object.__setattr__(self, "G", _frozen(symmetrize(G), np.float64))

    @property
    def n_modes(self) -> int:
        return self.G.shape[0] // 2

    @property
    def n_channels(self) -> int:
        return self.S.shape[0]

    @classmethod
    def identity(cls, n_channels: int, n_modes: int) -> LinearSLH:
        """(I, 0, 0), the neutral element of the series product."""
        return cls(
            S=np.eye(n_channels),
            L=np.zeros((n_channels, 2 * n_modes)),
            G=np.zeros((2 * n_modes, 2 * n_modes)),
        )

    def unitarity_error(self) -> float:
        return float(np.max(np.abs(self.S.conj().T @ self.S - np.eye(self.n_channels))))


@dataclass(frozen=True, slots=True, eq=False)
class DriftDiffusion:
    """dV/dt = A V + V A^T + D.

    The dimension is not necessarily even: reduced models may carry a single
    classical coordinate (the detector output).
    """
    A: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        D = np.asarray(self.D, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != D.shape:
            raise DimensionError(f"A and D must be equal square matrices, got {A.shape}, {D.shape}")
        scale = max(1.0, float(np.max(np.abs(D), initial=0.0)))
        if np.max(np.abs(D - D.T), initial=0.0) > 1e-10 * scale:
            raise DimensionError("D must be symmetric")
        object.__setattr__(self, "A", _frozen(A, np.float64))
        object.__setattr__(self, "D", _frozen(symmetrize(D), np.float64))

    @property
    def dim(self) -> int:
        return self.A.shape[0]


def _channel_weights(weights: Sequence[float] | np.ndarray | None, n_channels: int) -> np.ndarray:
    if weights is None:
        return np.ones(n_channels)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.size != n_channels:
        raise ConfigurationError(f"expected {n_channels} channel weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigurationError(f"channel weights must be finite and non-negative, got {w}")
    return w


def pad(
    sys: LinearSLH,
    target_channels: int,
    assignment: Sequence[int] | None = None,
    n_modes: int | None = None,
    mode_offset: int = 0,
) -> LinearSLH:
    """Embed sys into a larger channel space and, optionally, a larger mode space.

    assignment[k] is the target channel of sys's channel k (identity by
    default). Unassigned channels get zero coupling and identity scattering.
    sys's modes land at modes mode_offset .. mode_offset + sys.n_modes - 1
    of an n_modes-mode space, with zero G and L columns elsewhere.
    """
    if assignment is None:
        assignment = list(range(sys.n_channels))
    assignment = [int(a) for a in assignment]
    if len(assignment) != sys.n_channels:
        raise ConfigurationError(
            f"assignment has {len(assignment)} entries for {sys.n_channels} channels"
        )
    if len(set(assignment)) != len(assignment):
        raise ConfigurationError(f"channel assignment is not injective: {assignment}")
    if target_channels < sys.n_channels or any(a < 0 or a >= target_channels for a in assignment):
        raise ConfigurationError(
            f"assignment {assignment} does not fit into {target_channels} channels"
        )

    n_modes = sys.n_modes if n_modes is None else int(n_modes)
    if mode_offset < 0 or mode_offset + sys.n_modes > n_modes:
        raise ConfigurationError(
            f"cannot place {sys.n_modes} modes at offset {mode_offset} in {n_modes} modes"
        )

    idx = np.array(assignment, dtype=int)
    S = np.eye(target_channels, dtype=np.complex128)
    S[np.ix_(idx, idx)] = sys.S

    cols = slice(2 * mode_offset, 2 * (mode_offset + sys.n_modes))
    L = np.zeros((target_channels, 2 * n_modes), dtype=np.complex128)
    L[idx, cols] = sys.L

    G = np.zeros((2 * n_modes, 2 * n_modes))
    G[cols, cols] = sys.G
    return LinearSLH(S=S, L=L, G=G)


def series(
    g2: LinearSLH,
    g1: LinearSLH,
    noise_weights: Sequence[float] | np.ndarray | None = None,
) -> LinearSLH:
    """Cascade g2 <| g1: the outputs of g1 feed the inputs of g2.

    S = S2 S1, L = L2 + S2 L1, and the Hamiltonian gains
    (1/2i)(L2^H S2 L1 - L1^H S2^H L2), whose quadratic part is M + M^T with
    M = Im(L2^H W S2 L1). W = diag(noise_weights) is the per-channel input
    variance (1 for vacuum); a weighted channel carries classical noise of
    that variance, which rescales the Ito cross term.
    """
    if g1.n_channels != g2.n_channels:
        raise CompositionError(
            f"channel mismatch: {g2.n_channels} vs {g1.n_channels}; pad first"
        )
    if g1.n_modes != g2.n_modes:
        raise CompositionError(
            f"mode-space mismatch: {g2.n_modes} vs {g1.n_modes}; embed with pad first"
        )
    W = np.diag(_channel_weights(noise_weights, g1.n_channels))
    M = (g2.L.conj().T @ W @ g2.S @ g1.L).imag
    return LinearSLH(
        S=g2.S @ g1.S,
        L=g2.L + g2.S @ g1.L,
        G=g1.G + g2.G + M + M.T,
    )


def feedback_close(
    sys: LinearSLH,
    f: Sequence[float] | np.ndarray,
    g: float,
    channel: int,
    noise_weights: Sequence[float] | np.ndarray | None = None,
) -> LinearSLH:
    """Close a direct measurement-feedback loop on the homodyne output of channel.

    Realized as the series product of the controller (I, -i g F, 0) after
    sys, where F = f^T x and the controller couples through `channel` only.
    """
    if not 0 <= channel < sys.n_channels:
        raise ConfigurationError(f"channel {channel} out of range for {sys.n_channels} channels")
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    if f.size != 2 * sys.n_modes:
        raise ConfigurationError(f"feedback vector needs {2 * sys.n_modes} entries, got {f.size}")
    L_ctrl = np.zeros((sys.n_channels, 2 * sys.n_modes), dtype=np.complex128)
    L_ctrl[channel] = -1j * g * f
    controller = LinearSLH(
        S=np.eye(sys.n_channels),
        L=L_ctrl,
        G=np.zeros((2 * sys.n_modes, 2 * sys.n_modes)),
    )
    return series(controller, sys, noise_weights)


def strip_scattering(sys: LinearSLH) -> LinearSLH:
    """(S, L, G) -> (I, S^H L, G).

    Valid for unconditional-state analysis only: the discarded (S, 0, 0)
    stage merely rotates outputs nobody looks at. Conditional dynamics
    depend on S.
    """
    return LinearSLH(S=np.eye(sys.n_channels), L=sys.S.conj().T @ sys.L, G=sys.G)


def drift_diffusion(
    sys: LinearSLH,
    noise_weights: Sequence[float] | np.ndarray | None = None,
) -> DriftDiffusion:
    """A = Sigma_N [G + Im(L^H W L)],  D = Sigma_N Re(L^H W L) Sigma_N^T."""
    W = np.diag(_channel_weights(noise_weights, sys.n_channels))
    P = sys.L.conj().T @ W @ sys.L
    sig = sigma(sys.n_modes)
    return DriftDiffusion(A=sig @ (sys.G + P.imag), D=sig @ P.real @ sig.T)


def reduce_drift_diffusion(
    dd: DriftDiffusion,
    keep: Sequence[int],
    tol: float = DECOUPLING_TOL,
) -> DriftDiffusion:
    """Project onto the `keep` coordinates after checking the rest is block-decoupled."""
    keep = np.asarray(keep, dtype=int)
    drop = np.setdiff1d(np.arange(dd.dim), keep)
    if drop.size:
        scale_a = max(1.0, float(np.max(np.abs(dd.A))))
        scale_d = max(1.0, float(np.max(np.abs(dd.D))))
        coupling_a = max(
            float(np.max(np.abs(dd.A[np.ix_(keep, drop)]), initial=0.0)),
            float(np.max(np.abs(dd.A[np.ix_(drop, keep)]), initial=0.0)),
        )
        coupling_d = float(np.max(np.abs(dd.D[np.ix_(keep, drop)]), initial=0.0))
        if coupling_a > tol * scale_a or coupling_d > tol * scale_d:
            raise ConsistencyError(
                f"coordinates {drop.tolist()} are not decoupled "
                f"(|A| cross {coupling_a:.3e}, |D| cross {coupling_d:.3e})"
            )
        logger.debug("Dropped decoupled coordinates %s", drop.tolist())
    return DriftDiffusion(A=dd.A[np.ix_(keep, keep)], D=dd.D[np.ix_(keep, keep)])
