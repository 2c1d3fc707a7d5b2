"""Concurrent steady-state sweeps over g, tau or alpha."""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

import numpy as np

from lab.config import SweepSpec
from lab.csv_output import SWEEP_FIELDS, SweepRow, render_csv, write_csv
from lab.simulate import evaluate_steady, resolve_feedback
from shared.errors import NetworkError

logger = logging.getLogger(__name__)


def _evaluate_point(spec: SweepSpec, value: float, f: np.ndarray, check_dual: bool) -> SweepRow:
    try:
        result = evaluate_steady(spec.point_config(value), check_dual=check_dual, f=f)
    except NetworkError as e:
        logger.warning("Sweep point %s=%g failed: %s", spec.parameter, value, e)
        return SweepRow(value=value, status="error")
    if result.record is None:
        logger.warning("Sweep point %s=%g has no steady state (%s)",
                       spec.parameter, value, result.status)
        return SweepRow(value=value, status=result.status)
    return SweepRow(
        value=value,
        status=result.status,
        log_negativity=result.record.log_negativity,
        purity=result.record.purity,
    )


async def sweep_async(spec: SweepSpec, check_dual: bool = False) -> list[SweepRow]:
    """Evaluate all sweep points, at most spec.concurrency at a time.

    Returns:
        One row per value, in input order.
    """
    f, _ = resolve_feedback(spec.base)
    semaphore = asyncio.Semaphore(spec.concurrency)

    async def _run(value: float) -> SweepRow:
        async with semaphore:
            return await asyncio.to_thread(_evaluate_point, spec, value, f, check_dual)

    rows = await asyncio.gather(*(_run(v) for v in spec.values))
    steady = sum(1 for r in rows if r.status == "steady")
    logger.info("Sweep over %s: %d/%d points steady", spec.parameter, steady, len(rows))
    return list(rows)


def run_sweep(spec: SweepSpec, check_dual: bool = False) -> list[SweepRow]:
    return asyncio.run(sweep_async(spec, check_dual))


def sweep_csv(rows: list[SweepRow], log2: bool = False) -> str:
    return render_csv(SWEEP_FIELDS, (r.to_row(log2) for r in rows))


def save_sweep(rows: list[SweepRow], output_path: Path, log2: bool = False) -> Path:
    return write_csv(output_path, SWEEP_FIELDS, (r.to_row(log2) for r in rows))
