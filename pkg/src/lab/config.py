"""Run and sweep configuration for the lab CLI.

Config files are flat ``key = value`` text; ``#`` starts a comment. Keys
are the RunConfig field names. CLI flags override file values.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from network.models import CavityKind, CavityParams, DetectorParams, NetworkParams
from shared.errors import ConfigurationError


def _floats(value: Any) -> tuple[float, ...]:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        return tuple(float(p) for p in parts)
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in value)


class RunConfig(BaseModel):
    """One network run. Times and rates are in units of 1/kappa."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    network: Literal["ideal", "realistic"] = "ideal"
    cavity1: CavityKind = CavityKind.DISPERSIVE
    cavity2: CavityKind = CavityKind.DAMPED
    m: float = 0.2
    kappa: float = 1.0
    gain: float = 0.0
    f: Literal["riccati"] | tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    alpha: float = 1.0            # beam-splitter transmittance (realistic only)
    tau: float | None = None      # detector time constant (realistic only)
    a4: float | None = None       # detector noise variance (realistic only)
    v0: float | tuple[float, ...] = 2.0   # scalar -> v0 * I, else row-major matrix
    t_end: float = 20.0
    dt: float = 1e-3
    stride: int = 10              # keep every stride-th integration step
    out: Path | None = None

    @field_validator("f", mode="before")
    @classmethod
    def _parse_f(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() == "riccati":
            return "riccati"
        values = _floats(value)
        if len(values) != 4:
            raise ValueError(f"f must be 'riccati' or 4 comma-separated reals, got {len(values)} values")
        return values

    @field_validator("v0", mode="before")
    @classmethod
    def _parse_v0(cls, value: Any) -> Any:
        values = _floats(value)
        if len(values) == 1:
            return values[0]
        if len(values) not in (16, 25):
            raise ValueError(f"v0 must be a scalar or 16/25 reals, got {len(values)}")
        return values

    @field_validator("cavity1", "cavity2", mode="before")
    @classmethod
    def _parse_kind(cls, value: Any) -> Any:
        return value.strip().lower() if isinstance(value, str) else value

    @model_validator(mode="after")
    def _check(self) -> RunConfig:
        numbers = [self.m, self.kappa, self.gain, self.alpha, self.t_end, self.dt]
        numbers += [x for x in (self.tau, self.a4) if x is not None]
        numbers += list(self.f) if self.f != "riccati" else []
        numbers += [self.v0] if isinstance(self.v0, float) else list(self.v0)
        if not all(math.isfinite(x) for x in numbers):
            raise ValueError("all numeric fields must be finite")
        if self.m <= 0 or self.kappa <= 0:
            raise ValueError("m and kappa must be positive")
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("dt must be positive and t_end non-negative")
        if self.t_end != 0 and not self.dt < self.t_end:
            raise ValueError(f"dt ({self.dt}) must be smaller than t_end ({self.t_end})")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.network == "realistic":
            if self.tau is None or self.a4 is None:
                raise ValueError("the realistic network needs tau and a4")
            if self.tau <= 0 or self.a4 <= 0:
                raise ValueError("tau and a4 must be positive")
        if isinstance(self.v0, tuple) and len(self.v0) != self.dim ** 2:
            raise ValueError(f"v0 needs {self.dim ** 2} entries for the {self.network} network")
        return self

    @property
    def dim(self) -> int:
        """Dimension of the propagated covariance."""
        return 5 if self.network == "realistic" else 4

    def network_params(self, f: np.ndarray | tuple[float, ...] | None = None) -> NetworkParams:
        """Library parameters; f overrides the configured vector (needed for f = riccati)."""
        if f is None:
            if self.f == "riccati":
                raise ConfigurationError("f = riccati must be resolved before building the network")
            f = self.f
        detector = None
        if self.network == "realistic":
            detector = DetectorParams.low_pass(self.tau, self.a4)
        return NetworkParams(
            cavity1=CavityParams(m=self.m, kappa=self.kappa, kind=self.cavity1),
            cavity2=CavityParams(m=self.m, kappa=self.kappa, kind=self.cavity2),
            g=self.gain,
            f=tuple(float(x) for x in f),
            alpha=self.alpha,
            detector=detector,
        )

    def initial_covariance(self) -> np.ndarray:
        if isinstance(self.v0, float):
            return self.v0 * np.eye(self.dim)
        return np.array(self.v0, dtype=np.float64).reshape(self.dim, self.dim)


SweepParameter = Literal["g", "tau", "alpha"]

# Sweep parameter name -> RunConfig field
SWEEP_FIELDS: dict[str, str] = {"g": "gain", "tau": "tau", "alpha": "alpha"}


class SweepSpec(BaseModel):
    """Steady-state sweep of one parameter over a fixed base run."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    parameter: SweepParameter
    values: tuple[float, ...]
    base: RunConfig = RunConfig()
    concurrency: int = 4

    @field_validator("values", mode="before")
    @classmethod
    def _parse_values(cls, value: Any) -> Any:
        return _floats(value)

    @model_validator(mode="after")
    def _check(self) -> SweepSpec:
        if not self.values:
            raise ValueError("sweep needs at least one value")
        diffs = np.diff(self.values)
        if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep values must be strictly increasing or strictly decreasing")
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.parameter == "tau" and self.base.network != "realistic":
            raise ValueError("tau sweeps need the realistic network")
        if self.parameter == "alpha" and self.base.network != "realistic":
            raise ValueError("alpha sweeps need the realistic network")
        return self

    def point_config(self, value: float) -> RunConfig:
        data = self.base.model_dump()
        data[SWEEP_FIELDS[self.parameter]] = value
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(_format_validation(e)) from e


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` lines. Duplicate keys and malformed lines are errors."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def build_run_config(file_values: dict[str, Any] | None = None, **overrides: Any) -> RunConfig:
    """Validate file values with CLI overrides applied (None overrides are ignored)."""
    data = dict(file_values or {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(_format_validation(e)) from e


def build_sweep_spec(parameter: str, values: Any, base: RunConfig, concurrency: int = 4) -> SweepSpec:
    try:
        return SweepSpec(parameter=parameter, values=values, base=base, concurrency=concurrency)
    except ValidationError as e:
        raise ConfigurationError(_format_validation(e)) from e


def load_run_config(path: Path, **overrides: Any) -> RunConfig:
    """Load a run config file, then apply overrides."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    return build_run_config(parse_config_text(text, str(path)), **overrides)


def _format_validation(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "config"
        parts.append(f"{loc}: {err['msg']}")
    return "invalid configuration: " + "; ".join(parts)
