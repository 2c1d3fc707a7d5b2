"""Datasets behind the published figures, written as fig<id>_<series>.csv.

  2  E_N(t), P(t) of the uncontrolled networks from V0 = 2I
  3  phase-plane path (delta_tilde, det V) of the same runs, plus the E_N region grid
  4  steady E_N, P against the gain g with the Riccati-designed f
  5  controlled phase-plane paths (g = 1, Riccati f), plus the region grid
  6  realistic network: E_N against g for several tau (alpha = 1) and alpha (tau = 0.01)

All parameters are m = 0.2, kappa = 1.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from lab.config import RunConfig, SweepSpec
from lab.csv_output import SWEEP_FIELDS, fmt, write_csv
from lab.simulate import SimulationResult, resolve_feedback, run_simulation
from lab.sweep import run_sweep
from network.entanglement import log_negativity_from_invariants
from network.models import CavityKind

logger = logging.getLogger(__name__)

FIGURE_IDS = ("2", "3", "4", "5", "6")

PAIRINGS: dict[str, tuple[CavityKind, CavityKind]] = {
    "dispersive_damped": (CavityKind.DISPERSIVE, CavityKind.DAMPED),
    "damped_damped": (CavityKind.DAMPED, CavityKind.DAMPED),
}

GAIN_GRID = tuple(float(g) for g in np.round(np.linspace(0.0, 1.0, 21), 10))
TAU_VALUES = (0.01, 0.2, 0.4, 0.6)
ALPHA_VALUES = (1.0, 0.99, 0.95, 0.90)
DETECTOR_NOISE = 0.01

# Phase-plane grid for the entangled-region map
REGION_DELTA = np.linspace(0.5, 10.0, 96)
REGION_DET = np.linspace(1.0 / 16.0, 16.0, 96)


def _base(pairing: str, **updates) -> RunConfig:
    c1, c2 = PAIRINGS[pairing]
    data = {"cavity1": c1, "cavity2": c2, "m": 0.2, "kappa": 1.0, "v0": 2.0}
    data.update(updates)
    return RunConfig.model_validate(data)


def _path_rows(result: SimulationResult, with_purity: bool) -> list[list[str]]:
    rows = []
    for r in result.rows:
        row = [fmt(r.t), fmt(r.delta_tilde), fmt(r.det_v), fmt(r.log_negativity)]
        if with_purity:
            row.append(fmt(r.purity))
        rows.append(row)
    return rows


def region_rows() -> list[list[str]]:
    """E_N over the (delta_tilde, det V) grid; points outside the physical region sit on its boundary."""
    rows = []
    for d in REGION_DELTA:
        for det in REGION_DET:
            en = log_negativity_from_invariants(float(d), float(det), clamp=True)
            rows.append([fmt(float(d)), fmt(float(det)), fmt(en)])
    return rows


def _figure2(out_dir: Path, t_end: float, dt: float) -> list[Path]:
    paths = []
    for name in PAIRINGS:
        result = run_simulation(_base(name, t_end=t_end, dt=dt))
        rows = [[fmt(r.t), fmt(r.log_negativity), fmt(r.purity)] for r in result.rows]
        paths.append(write_csv(out_dir / f"fig2_{name}.csv", ["t", "EN", "P"], rows))
    return paths


def _phase_plane(fig: str, out_dir: Path, t_end: float, dt: float, controlled: bool) -> list[Path]:
    paths = []
    header = ["t", "delta_tilde", "detV", "EN"] + (["P"] if controlled else [])
    for name in PAIRINGS:
        updates = {"t_end": t_end, "dt": dt}
        if controlled:
            updates.update(gain=1.0, f="riccati")
        result = run_simulation(_base(name, **updates))
        paths.append(write_csv(out_dir / f"fig{fig}_{name}.csv", header, _path_rows(result, controlled)))
    paths.append(write_csv(out_dir / f"fig{fig}_region.csv", ["delta_tilde", "detV", "EN"], region_rows()))
    return paths


def _figure4(out_dir: Path, concurrency: int) -> list[Path]:
    paths = []
    for name in PAIRINGS:
        spec = SweepSpec(parameter="g", values=GAIN_GRID,
                         base=_base(name, f="riccati"), concurrency=concurrency)
        rows = run_sweep(spec)
        paths.append(write_csv(out_dir / f"fig4_{name}.csv", SWEEP_FIELDS, (r.to_row() for r in rows)))
    return paths


def _figure6(out_dir: Path, concurrency: int) -> list[Path]:
    # The realistic network reuses the ideal dispersive-damped design
    f_bar, _ = resolve_feedback(_base("dispersive_damped", f="riccati"))
    f = tuple(float(x) for x in f_bar)

    series = {
        "tau": [(tau, {"tau": tau, "alpha": 1.0}) for tau in TAU_VALUES],
        "alpha": [(alpha, {"tau": 0.01, "alpha": alpha}) for alpha in ALPHA_VALUES],
    }
    paths = []
    for label, entries in series.items():
        rows = []
        for value, updates in entries:
            base = _base("dispersive_damped", network="realistic", a4=DETECTOR_NOISE, f=f, **updates)
            spec = SweepSpec(parameter="g", values=GAIN_GRID, base=base, concurrency=concurrency)
            for r in run_sweep(spec):
                rows.append([fmt(value), *r.to_row()])
        header = [label, "g", *SWEEP_FIELDS[1:]]
        paths.append(write_csv(out_dir / f"fig6_{label}.csv", header, rows))
    return paths


def write_figure(
    fig_id: str,
    out_dir: Path,
    t_end: float = 20.0,
    dt: float = 1e-3,
    concurrency: int = 4,
) -> list[Path]:
    """Write the CSV bundle for one figure and return the file paths."""
    fig_id = str(fig_id)
    if fig_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {fig_id!r}; choose from {', '.join(FIGURE_IDS)}")
    out_dir = Path(out_dir)
    logger.info("Writing figure %s datasets to %s", fig_id, out_dir)
    if fig_id == "2":
        return _figure2(out_dir, t_end, dt)
    if fig_id == "3":
        return _phase_plane("3", out_dir, t_end, dt, controlled=False)
    if fig_id == "4":
        return _figure4(out_dir, concurrency)
    if fig_id == "5":
        return _phase_plane("5", out_dir, t_end, dt, controlled=True)
    return _figure6(out_dir, concurrency)
