"""Command-line surface: solve / compare / estimate / stream-verify / serve."""

from __future__ import annotations

import sys

import click
import numpy as np

from .config import DATAPATH_FIXED, ConfigError, RunConfig, load_config
from .dataflow import StreamConfig, buffer_sizes, estimate_cycles, stream_sweep
from .fixedpoint import max_abs_error, solve_fixed, to_fixed_array, sweep_fixed
from .grid import ELEM_Q5_27, GridMismatchError, ValueField
from .safety import build_initial_values
from .solver import NumericalInstabilityError, set_thread_count, solve, sweep
from .valuefile import ValueFileError, read_valuefile, write_valuefile


def _load(config_path: str) -> RunConfig:
    try:
        return load_config(config_path)
    except (ConfigError, ValueError) as exc:
        raise click.ClickException(str(exc))


@click.group()
def main():
    """Reachability solving, datapath verification, and the live simulator."""


@main.command("solve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Run configuration (YAML).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output value file.")
@click.option("--datapath", type=click.Choice(["float", "fixed"]), default=None,
              help="Override the config's element type.")
@click.option("--threads", type=int, default=None, help="Sweep worker count.")
def cmd_solve(config_path, out_path, datapath, threads):
    """Solve the configured problem and write the final value field."""
    cfg = _load(config_path)
    path_kind = datapath or cfg.datapath
    v0 = build_initial_values(cfg.environment, cfg.grid)
    car = cfg.car()
    try:
        if path_kind == DATAPATH_FIXED:
            result, report = solve_fixed(v0, car, cfg.solver, threads=threads)
        else:
            result, report = solve(v0, car, cfg.solver, threads=threads)
    except NumericalInstabilityError as exc:
        raise click.ClickException(str(exc))
    except ValueError as exc:
        raise click.ClickException(str(exc))
    write_valuefile(result, out_path)
    click.echo(f"datapath: {path_kind}")
    click.echo(f"iterations: {report.iterations}")
    click.echo(f"dt: {report.dt:.9g}")
    click.echo(f"final_epsilon: {report.final_epsilon:.6e}")
    click.echo(f"wall_time: {report.wall_time:.3f}s")
    if report.saturation_events:
        click.echo(f"saturation_events: {report.saturation_events}")
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"wrote {out_path}")


@main.command("compare")
@click.argument("file_a", type=click.Path(exists=True))
@click.argument("file_b", type=click.Path(exists=True))
def cmd_compare(file_a, file_b):
    """Print the max absolute difference between two value files."""
    try:
        a = read_valuefile(file_a)
        b = read_valuefile(file_b)
        err = max_abs_error(a, b)
    except (ValueFileError, GridMismatchError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"{err:.6e}")


@main.command("estimate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--iterations", type=int, default=None,
              help="Override the iteration count (default: from solver settings).")
def cmd_estimate(config_path, iterations):
    """Model the accelerator's cycle count and latency for the configured run."""
    import math

    cfg = _load(config_path)
    if iterations is None:
        if cfg.solver.dt_override is not None:
            iterations = max(1, math.ceil(cfg.solver.horizon / cfg.solver.dt_override))
        else:
            from .solver import compute_timestep
            dt = compute_timestep(cfg.car().global_alpha_bound(cfg.grid),
                                  cfg.grid, cfg.solver.cfl_factor)
            iterations = max(1, math.ceil(cfg.solver.horizon / dt))
    cycles, latency = estimate_cycles(cfg.grid, iterations, cfg.stream)
    caps = buffer_sizes(cfg.grid, cfg.stream.n_pe)
    click.echo(f"iterations: {iterations}")
    click.echo(f"cycles: {cycles}")
    click.echo(f"latency: {latency:.6f}s")
    click.echo(f"rate: {1.0 / latency:.3f}Hz")
    click.echo(f"line_buffer_slots: {caps[0]} x {len(caps)}")


@main.command("stream-verify")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, help="Seed for the random test field.")
@click.option("--undersized", is_flag=True,
              help="Debug: shrink every line by one slot to show the failure mode.")
def cmd_stream_verify(config_path, seed, undersized):
    """Check that the streamed sweep is bit-identical to the batch sweep."""
    cfg = _load(config_path)
    grid = cfg.grid
    rng = np.random.default_rng(seed)
    vt = ValueField(grid, rng.uniform(-4.0, 4.0, grid.dims))
    v0 = ValueField(grid, rng.uniform(-4.0, 4.0, grid.dims))
    dt = cfg.solver.dt_override or 0.005
    caps = None
    strict = True
    if undersized:
        caps = [c - 1 for c in buffer_sizes(grid, cfg.stream.n_pe)]
        strict = False

    failures = 0
    batch, _ = sweep(vt, v0, dt, cfg.car())
    streamed = stream_sweep(vt, v0, dt, cfg.car(), cfg.stream,
                            capacities=caps, strict_taps=strict)
    if np.array_equal(batch.data, streamed.data):
        click.echo("float: PASS (bit-exact)")
    else:
        first = int(np.flatnonzero(batch.data.ravel() != streamed.data.ravel())[0])
        click.echo(f"float: FAIL (first divergence at linear index {first})")
        failures += 1

    vt_q = ValueField(grid, to_fixed_array(vt.data, "field").astype(np.int32), ELEM_Q5_27)
    v0_q = ValueField(grid, to_fixed_array(v0.data, "field").astype(np.int32), ELEM_Q5_27)
    batch_q, _, _ = sweep_fixed(vt_q, v0_q, dt, cfg.car())
    streamed_q = stream_sweep(vt_q, v0_q, dt, cfg.car(), cfg.stream,
                              capacities=caps, strict_taps=strict)
    if np.array_equal(batch_q.data, streamed_q.data):
        click.echo("fixed: PASS (bit-exact)")
    else:
        first = int(np.flatnonzero(batch_q.data.ravel() != streamed_q.data.ravel())[0])
        click.echo(f"fixed: FAIL (first divergence at linear index {first})")
        failures += 1
    if failures:
        sys.exit(1)


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--port", type=int, default=8700, help="WebSocket port.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--threads", type=int, default=None, help="Solver worker count.")
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Also serve this directory of static files over HTTP.")
def cmd_serve(config_path, port, host, threads, ui_dir):
    """Run the live simulation service the UI connects to."""
    from .service import run_service

    cfg = _load(config_path)
    if threads is not None:
        set_thread_count(threads)
    run_service(cfg, host=host, port=port, ui_dir=ui_dir)


if __name__ == "__main__":
    main()
