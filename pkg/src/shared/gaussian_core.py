"""Matrix and symplectic primitives for Gaussian states of N bosonic modes.

Conventions (fixed across the whole package):
  - quadrature ordering x = (q1, p1, q2, p2, ...)
  - hbar = 1, so the vacuum covariance is I/2
  - Sigma_N is the block-diagonal direct sum of N copies of [[0, 1], [-1, 0]]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from shared.errors import DimensionError

SYMMETRY_TOL = 1e-10
PHYSICALITY_TOL = 1e-9

SIGMA = np.array([[0.0, 1.0], [-1.0, 0.0]])
SIGMA.setflags(write=False)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, slots=True, eq=False)
class SymplecticForm:
    """Sigma_N for a given number of modes."""
    n_modes: int
    matrix: np.ndarray  # 2N x 2N

    @property
    def dim(self) -> int:
        return 2 * self.n_modes


def symplectic_form(n_modes: int) -> SymplecticForm:
    """Block-diagonal symplectic form Sigma_N."""
    if int(n_modes) != n_modes or n_modes < 1:
        raise DimensionError(f"n_modes must be a positive integer, got {n_modes!r}")
    n = int(n_modes)
    return SymplecticForm(n_modes=n, matrix=_frozen(np.kron(np.eye(n), SIGMA)))


def sigma(n_modes: int) -> np.ndarray:
    """Shorthand for symplectic_form(n).matrix."""
    return symplectic_form(n_modes).matrix


def asymmetry(M: np.ndarray) -> float:
    return float(np.max(np.abs(M - M.T)))


def symmetry_tolerance(M: np.ndarray) -> float:
    """SYMMETRY_TOL scaled by the largest entry, floored at 1."""
    return SYMMETRY_TOL * max(1.0, float(np.max(np.abs(M))))


@dataclass(frozen=True, slots=True, eq=False)
class CovarianceMatrix:
    """Symmetric 2N x 2N matrix of symmetrized quadrature second moments."""
    V: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2 or V.shape[0] == 0:
            raise DimensionError(f"covariance must be 2N x 2N, got shape {V.shape}")
        if not np.all(np.isfinite(V)):
            raise DimensionError("covariance has non-finite entries")
        asym = asymmetry(V)
        if asym > symmetry_tolerance(V):
            raise DimensionError(f"covariance is not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "V", _frozen(0.5 * (V + V.T)))

    @property
    def n_modes(self) -> int:
        return self.V.shape[0] // 2

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.V))

    @classmethod
    def vacuum(cls, n_modes: int) -> CovarianceMatrix:
        return cls(0.5 * np.eye(2 * n_modes))

    @classmethod
    def scalar(cls, n_modes: int, value: float) -> CovarianceMatrix:
        """value * I, e.g. scalar(2, 2.0) is the separable initial state V0 = 2I."""
        return cls(float(value) * np.eye(2 * n_modes))


@dataclass(frozen=True, slots=True, eq=False)
class MeanVector:
    """First moments (<q1>, <p1>, ..., <qN>, <pN>)."""
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.size == 0 or v.size % 2:
            raise DimensionError(f"mean vector needs 2N entries, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise DimensionError("mean vector has non-finite entries")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n_modes(self) -> int:
        return self.values.size // 2


@dataclass(frozen=True, slots=True, eq=False)
class TwoModeBlocks:
    """V = [[V1, V2], [V2^T, V3]] for a two-mode state."""
    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray

    def assemble(self) -> np.ndarray:
        return np.block([[self.V1, self.V2], [self.V2.T, self.V3]])


def as_array(V: CovarianceMatrix | np.ndarray) -> np.ndarray:
    """Raw float array from a CovarianceMatrix or array-like."""
    if isinstance(V, CovarianceMatrix):
        return V.V
    return np.asarray(V, dtype=np.float64)


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def block_partition(V: CovarianceMatrix | np.ndarray) -> TwoModeBlocks:
    """Split a 4x4 two-mode covariance into its 2x2 blocks."""
    M = as_array(V)
    if M.shape != (4, 4):
        raise DimensionError(f"block_partition needs a 4x4 matrix, got {M.shape}")
    return TwoModeBlocks(
        V1=_frozen(M[:2, :2]),
        V2=_frozen(M[:2, 2:]),
        V3=_frozen(M[2:, 2:]),
    )


def is_physical(V: CovarianceMatrix | np.ndarray, tol: float = PHYSICALITY_TOL) -> bool:
    """True iff V + (i/2) Sigma_N is positive semidefinite within tol."""
    M = as_array(V)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise DimensionError(f"covariance must be 2N x 2N, got shape {M.shape}")
    if asymmetry(M) > symmetry_tolerance(M):
        raise DimensionError("is_physical needs a symmetric matrix")
    n = M.shape[0] // 2
    herm = M + 0.5j * sigma(n)
    return bool(np.min(np.linalg.eigvalsh(herm)) >= -tol)


def two_mode_squeezed(r: float) -> CovarianceMatrix:
    """Covariance of the two-mode squeezed vacuum with squeeze parameter r."""
    c = 0.5 * np.cosh(2 * r)
    s = 0.5 * np.sinh(2 * r)
    Z = np.diag([1.0, -1.0])
    return CovarianceMatrix(np.block([[c * np.eye(2), s * Z], [s * Z, c * np.eye(2)]]))
