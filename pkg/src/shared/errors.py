"""Exception hierarchy shared by the network library and the lab CLI.

Value-type problems derive from ValueError and numerical failures from
RuntimeError, so callers that only know the builtins still catch them.
The CLI maps the first group to exit code 2 and NumericalError to 3.
"""

from __future__ import annotations

from collections.abc import Sequence


class NetworkError(Exception):
    """Root of all errors raised by this project."""


class DimensionError(NetworkError, ValueError):
    """Matrix has the wrong shape, or a mode count is invalid."""


class ConfigurationError(NetworkError, ValueError):
    """Parameters or channel maps violate a model invariant."""


class CompositionError(NetworkError, ValueError):
    """Two systems cannot be cascaded (channel or mode-space mismatch)."""


class UnphysicalCovarianceError(NetworkError, ValueError):
    """Covariance violates the uncertainty principle beyond tolerance."""


class NumericalError(NetworkError, RuntimeError):
    """A numerical procedure failed."""


class DivergenceError(NumericalError):
    """Integration produced non-finite values."""

    def __init__(self, time: float, message: str | None = None):
        self.time = time
        super().__init__(message or f"integration diverged at t={time:.6g}")


class NoSteadyStateError(NumericalError):
    """The drift matrix is not Hurwitz, so no unique steady state exists."""

    def __init__(self, stability, message: str | None = None):
        self.stability = stability
        super().__init__(
            message or f"no steady state: drift matrix is {stability.kind.value.lower()}"
        )


class RiccatiSolverError(NumericalError):
    """No stabilizing Riccati solution was found within the iteration budget."""

    def __init__(self, residual_history: Sequence[float], message: str | None = None):
        self.residual_history = list(residual_history)
        last = self.residual_history[-1] if self.residual_history else float("nan")
        super().__init__(
            message or f"Riccati solver failed after {len(self.residual_history)} "
                       f"iterations (last residual {last:.3e})"
        )


class ConsistencyError(NumericalError):
    """Closed-form and cascade-built matrices disagree."""
