"""Deterministic CSV output for trajectories, sweeps and figure bundles.

Every float is written with 12 significant digits; rows end with '\\n'.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

COVARIANCE_FIELDS = [f"V{i}{j}" for i in range(1, 5) for j in range(1, 5)]

TRAJECTORY_FIELDS = [
    "t",
    "EN",
    "P",
    "delta_tilde",
    "detV",
    *COVARIANCE_FIELDS,    # row-major cavity covariance
]

SWEEP_FIELDS = [
    "value",
    "status",    # steady | marginal | unstable | error
    "EN",        # empty unless steady
    "P",
]

LN2 = math.log(2.0)


def fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.12g}"


@dataclass(slots=True)
class TrajectoryRow:
    """Metrics of one trajectory sample."""
    t: float
    log_negativity: float
    purity: float
    delta_tilde: float
    det_v: float
    covariance: np.ndarray     # 4x4 cavity block

    def to_row(self, log2: bool = False) -> list[str]:
        en = self.log_negativity / LN2 if log2 else self.log_negativity
        return [
            fmt(self.t),
            fmt(en),
            fmt(self.purity),
            fmt(self.delta_tilde),
            fmt(self.det_v),
            *(fmt(float(v)) for v in np.asarray(self.covariance).reshape(-1)),
        ]


@dataclass(slots=True)
class SweepRow:
    value: float
    status: str
    log_negativity: float | None = None
    purity: float | None = None

    def to_row(self, log2: bool = False) -> list[str]:
        en = self.log_negativity
        if en is not None and log2:
            en = en / LN2
        return [fmt(self.value), self.status, fmt(en), fmt(self.purity)]


def render_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    """Write one CSV file (creating parent directories)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(render_csv(header, rows))
    logger.info("CSV saved to %s", path)
    return path
