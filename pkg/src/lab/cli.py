"""CLI for the cavity feedback network lab.

All times and rates are in units of 1/kappa.

Usage:
    qfb-lab simulate --cavity1 dispersive --cavity2 damped --t-end 20 --out run.csv
    qfb-lab steady --cavity1 damped --cavity2 damped
    qfb-lab design --cavity1 dispersive --cavity2 damped
    qfb-lab sweep g 0,0.25,0.5,0.75,1 --f riccati --out sweep.csv
    qfb-lab figure 6 --out-dir ./figures
"""

from __future__ import annotations

import functools
import logging
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from lab.config import RunConfig, build_run_config, build_sweep_spec, load_run_config
from shared.errors import NumericalError

logger = logging.getLogger(__name__)

EXIT_NUMERICAL = 3

CAVITY_KINDS = click.Choice(["damped", "dispersive"], case_sensitive=False)


@contextmanager
def _exit_codes():
    """Map library errors onto exit codes: 2 for bad input, 3 for numerical failure."""
    try:
        yield
    except NumericalError as e:
        click.echo(f"Error: {e}", err=True)
        raise SystemExit(EXIT_NUMERICAL) from e
    except ValueError as e:
        raise click.UsageError(str(e)) from e


def run_options(func):
    """Options shared by every command that builds a RunConfig."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="key = value run file; flags override it"),
        click.option("--network", type=click.Choice(["ideal", "realistic"]), help="Network model"),
        click.option("--cavity1", type=CAVITY_KINDS, help="First cavity coupling"),
        click.option("--cavity2", type=CAVITY_KINDS, help="Second cavity coupling"),
        click.option("--m", type=float, help="Hamiltonian asymmetry m"),
        click.option("--kappa", type=float, help="Cavity coupling rate"),
        click.option("--gain", "-g", type=float, help="Feedback gain g"),
        click.option("--f", "f", help="Feedback vector 'f1,f2,f3,f4' or 'riccati'"),
        click.option("--alpha", type=float, help="Beam-splitter transmittance (realistic)"),
        click.option("--tau", type=float, help="Detector time constant (realistic)"),
        click.option("--a4", type=float, help="Detector noise variance (realistic)"),
        click.option("--v0", help="Initial covariance: scalar (times I) or 16/25 row-major reals"),
        click.option("--t-end", "t_end", type=float, help="Final time"),
        click.option("--dt", type=float, help="RK4 step"),
        click.option("--stride", type=int, help="Keep every n-th integration step"),
        click.option("--check-dual", is_flag=True, help="Cross-check closed form against the cascade build"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _run_config(config_path: Path | None, **flags) -> RunConfig:
    if config_path is not None:
        return load_run_config(config_path, **flags)
    return build_run_config(None, **flags)


def _with_run_config(func):
    """Collapse the run options into a single RunConfig argument."""
    @functools.wraps(func)
    def wrapper(config_path, check_dual, out=None, log2=False, **flags):
        with _exit_codes():
            cfg = _run_config(config_path, out=out, **flags)
            return func(cfg, check_dual=check_dual, log2=log2)
    return wrapper


def _en(value: float, log2: bool) -> float:
    return value / np.log(2.0) if log2 else value


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging")
def cli(verbose: bool):
    """Linear quantum feedback networks: covariance dynamics, feedback design and entanglement.

    Times and rates are normalized by the cavity coupling rate kappa.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@cli.command()
@run_options
@click.option("--out", "-o", type=click.Path(dir_okay=False, path_type=Path), help="CSV output (default: stdout)")
@click.option("--log2", is_flag=True, help="Report E_N in base 2")
@_with_run_config
def simulate(cfg: RunConfig, check_dual: bool, log2: bool):
    """Propagate the covariance and write the trajectory CSV."""
    from lab.simulate import run_simulation, save_trajectory, trajectory_csv

    result = run_simulation(cfg, check_dual=check_dual)
    if cfg.out is not None:
        save_trajectory(result, cfg.out, log2=log2)
        events = ", ".join(f"{e.kind.value} t={e.time:.4f}" for e in result.transitions())
        click.echo(f"{len(result.rows)} samples, max EN={_en(result.max_log_negativity, log2):.4f}"
                   + (f", {events}" if events else ""))
    else:
        click.echo(trajectory_csv(result, log2=log2), nl=False)


@cli.command()
@run_options
@click.option("--log2", is_flag=True, help="Report E_N in base 2")
@_with_run_config
def steady(cfg: RunConfig, check_dual: bool, log2: bool):
    """Classify the closed loop and report its steady cavity state."""
    from lab.simulate import steady_state

    result = steady_state(cfg, check_dual=check_dual)
    rec = result.record
    click.echo(f"stability: {result.stability.kind.value}")
    click.echo(f"EN: {_en(rec.log_negativity, log2):.6f}")
    click.echo(f"P: {rec.purity:.6f}")
    click.echo(f"detV: {rec.det_v:.8f}")
    click.echo("V:")
    for row in result.covariance.V:
        click.echo("  " + " ".join(f"{x: .6f}" for x in row))


@cli.command()
@run_options
@_with_run_config
def design(cfg: RunConfig, check_dual: bool, log2: bool):
    """Riccati design of the feedback vector for the ideal network."""
    from network.entanglement import log_negativity
    from network.models import design_ideal_feedback

    if cfg.network != "ideal":
        raise click.UsageError("feedback design is defined for the ideal network only")
    solution = design_ideal_feedback(cfg.network_params(f=np.zeros(4)))
    click.echo("f_bar: " + " ".join(f"{x:.4f}" for x in solution.f_bar))
    click.echo(f"detV: {solution.det:.8f}")
    click.echo(f"EN: {log_negativity(solution.V):.6f}")
    click.echo(f"residual: {solution.residual:.3e} ({solution.iterations} Newton iterations)")


@cli.command()
@click.argument("parameter", type=click.Choice(["g", "tau", "alpha"]))
@click.argument("values")
@run_options
@click.option("--out", "-o", type=click.Path(dir_okay=False, path_type=Path), help="CSV output (default: stdout)")
@click.option("--log2", is_flag=True, help="Report E_N in base 2")
@click.option("--concurrency", default=4, type=int, help="Max concurrently evaluated points")
def sweep(parameter: str, values: str, config_path: Path | None, check_dual: bool,
          out: Path | None, log2: bool, concurrency: int, **flags):
    """Steady E_N and P over comma-separated VALUES of PARAMETER."""
    from lab.sweep import run_sweep, save_sweep, sweep_csv

    with _exit_codes():
        base = _run_config(config_path, **flags)
        spec = build_sweep_spec(parameter, values, base, concurrency)
        rows = run_sweep(spec, check_dual=check_dual)
    if out is not None:
        save_sweep(rows, out, log2=log2)
        steady_count = sum(1 for r in rows if r.status == "steady")
        click.echo(f"{len(rows)} points ({steady_count} steady) written to {out}")
    else:
        click.echo(sweep_csv(rows, log2=log2), nl=False)


@cli.command()
@click.argument("fig_id", type=click.Choice(["2", "3", "4", "5", "6"]))
@click.option("--out-dir", "-o", type=click.Path(file_okay=False, path_type=Path),
              default=Path("."), help="Output directory")
@click.option("--t-end", "t_end", type=float, default=20.0, help="Final time of trajectory figures")
@click.option("--dt", type=float, default=1e-3, help="RK4 step of trajectory figures")
@click.option("--concurrency", default=4, type=int, help="Max concurrently evaluated sweep points")
def figure(fig_id: str, out_dir: Path, t_end: float, dt: float, concurrency: int):
    """Write the CSV datasets underlying figure FIG_ID."""
    from lab.figures import write_figure

    with _exit_codes():
        paths = write_figure(fig_id, out_dir, t_end=t_end, dt=dt, concurrency=concurrency)
    for path in paths:
        click.echo(f"Wrote {path}")
