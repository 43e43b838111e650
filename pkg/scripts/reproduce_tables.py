#!/usr/bin/env python3
"""Reproduce the headline numbers for the three room layouts.

For each checked-in environment config this solves the reachability problem
on both datapaths, compares them, and prints the cycle/latency model of the
streaming accelerator:

    datapath error table   (max |fixed - float| per environment)
    cycle model table      (cycles, latency, implied re-solve rate)
    iteration counts and host wall times

Usage:
    python scripts/reproduce_tables.py [--quick] [--threads N]
"""

import argparse
import math
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from hjstream.config import load_config
from hjstream.dataflow import buffer_sizes, estimate_cycles
from hjstream.fixedpoint import max_abs_error, solve_fixed
from hjstream.safety import build_initial_values
from hjstream.solver import set_thread_count, solve


def shrink(cfg):
    """Quick mode: quarter-resolution grid, same physics, matching room."""
    from dataclasses import replace
    from hjstream.grid import GridConfig
    from hjstream.safety import Environment
    grid = GridConfig((20, 20, 10, 12),
                      (-2.85, -1.8765, 0.0, -math.pi),
                      (0.3, 0.201, 0.4, 2 * math.pi / 12),
                      (False, False, False, True))
    env = Environment(cfg.environment.obstacles,
                      room_width=2 * 2.85, room_height=2 * 1.8765)
    return replace(cfg, grid=grid, environment=env)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="small grid, fast run")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    if args.threads:
        set_thread_count(args.threads)

    rows = []
    for idx in (1, 2, 3):
        cfg = load_config(REPO / "configs" / f"env{idx}.yaml")
        if args.quick:
            cfg = shrink(cfg)
        v0 = build_initial_values(cfg.environment, cfg.grid)
        car = cfg.car()

        t0 = time.perf_counter()
        float_field, float_rep = solve(v0, car, cfg.solver)
        t_float = time.perf_counter() - t0

        t0 = time.perf_counter()
        fixed_field, fixed_rep = solve_fixed(v0, car, cfg.solver)
        t_fixed = time.perf_counter() - t0

        err = max_abs_error(fixed_field, float_field)
        cycles, latency = estimate_cycles(cfg.grid, float_rep.iterations, cfg.stream)
        rows.append((idx, float_rep.iterations, err, cycles, latency,
                     t_float, t_fixed, fixed_rep.saturation_events))

    print("\nDatapath error (max |fixed - float| over the grid)")
    print(f"{'env':>4} {'iters':>6} {'error':>12} {'saturations':>12}")
    for r in rows:
        print(f"{r[0]:>4} {r[1]:>6} {r[2]:>12.3e} {r[7]:>12}")

    print("\nStreaming accelerator model (4 PEs, 4 ns clock)")
    print(f"{'env':>4} {'cycles':>12} {'latency':>10} {'rate':>8}")
    for r in rows:
        print(f"{r[0]:>4} {r[3]:>12} {r[4]:>9.4f}s {1/r[4]:>7.2f}Hz")

    cfg = load_config(REPO / "configs" / "env1.yaml")
    caps = buffer_sizes(cfg.grid, cfg.stream.n_pe)
    print(f"\nLine buffers: {cfg.stream.n_pe} lines x {caps[0]} slots "
          f"(window {sum(caps)} >= {2 * cfg.grid.dims[1] * cfg.grid.dims[2] * cfg.grid.dims[3] + 1})")

    print("\nHost wall times (this machine, not the accelerator)")
    print(f"{'env':>4} {'float':>8} {'fixed':>8}")
    for r in rows:
        print(f"{r[0]:>4} {r[5]:>7.2f}s {r[6]:>7.2f}s")


if __name__ == "__main__":
    main()
