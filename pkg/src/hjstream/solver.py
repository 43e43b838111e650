"""Time-stepping for the value-function PDE.

Two paths solve the same terminal-value problem:

* :func:`solve` - the production single-pass scheme.  Each iteration makes
  one traversal of the grid; at every node it forms central differences,
  picks the bang-bang control, assembles the Hamiltonian plus the local
  upwinding term |f_d| (D+ - D-)/2 (together equivalent to one-sided
  differencing along each axis), Euler-steps by a precomputed dt, and
  clamps with the running minimum against the initial values.
* :func:`reference_solve` - the slower three-pass variant used as an oracle:
  pass one stores Hamiltonians and global derivative ranges, pass two adds
  global dissipation bounded over those ranges and tracks the per-axis
  maxima that set the stable time step (recomputed every iteration), pass
  three integrates and clamps.

The stable step is dt = cfl / sum_d(alpha_d^max / dx_d).

Within a sweep every output node is a pure function of the read-only input
field, so sweeps may fan out across threads and still give bit-identical
results; iterations are strictly sequential.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _kernels
from .dynamics import Dynamics, Gradient4
from .grid import (ELEM_FLOAT64, GridConfig, GridMismatchError, StateTables,
                   ValueField, linear_index, neighbor_value, state_at)

MODE_FIXED_HORIZON = "fixed_horizon"
MODE_CONVERGE = "converge"

THREADS_ENV_VAR = "HJSTREAM_THREADS"


class NumericalInstabilityError(RuntimeError):
    """Non-finite values appeared during a solve."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite values in the field after iteration {iteration}; "
                         f"the time step is likely unstable")
        self.iteration = iteration


@dataclass(frozen=True)
class SolveSettings:
    mode: str = MODE_FIXED_HORIZON
    horizon: float = 0.5
    dt_override: float | None = None
    cfl_factor: float = 0.9
    epsilon_threshold: float = 1e-3
    max_iterations: int = 100_000

    def __post_init__(self):
        if self.mode not in (MODE_FIXED_HORIZON, MODE_CONVERGE):
            raise ValueError(f"unknown solve mode {self.mode!r}")
        if self.mode == MODE_FIXED_HORIZON and not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if self.mode == MODE_CONVERGE and not self.epsilon_threshold > 0.0:
            raise ValueError("epsilon_threshold must be positive")
        if not 0.0 < self.cfl_factor <= 1.0:
            raise ValueError("cfl_factor must be in (0, 1]")
        if self.dt_override is not None and not (
                math.isfinite(self.dt_override) and self.dt_override > 0.0):
            raise ValueError("dt_override must be positive and finite")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class SolveReport:
    iterations: int
    dt: float
    final_epsilon: float
    wall_time: float
    sweep_timings: list[float] = field(default_factory=list)
    saturation_events: int = 0
    warnings: list[str] = field(default_factory=list)
    alpha_max_history: list[tuple[float, float, float, float]] | None = None


@dataclass(frozen=True)
class KernelPack:
    """Flat constants for the compiled sweep: tables, reciprocal spacings,
    control bounds.  Spacings enter only as reciprocals (no runtime division)."""

    vtab: np.ndarray
    costab: np.ndarray
    sintab: np.ndarray
    inv_dx: tuple[float, float, float, float]
    a_min: float
    a_max: float
    tdl_min: float
    tdl_max: float


def set_thread_count(threads: int | None) -> int:
    """Pin the worker count for compiled sweeps; returns the count in effect.

    ``None`` falls back to the HJSTREAM_THREADS environment variable, then
    to everything available.  Requests are clamped to what numba can offer.
    """
    if threads is None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            threads = int(env)
    limit = numba.config.NUMBA_NUM_THREADS
    if threads is None:
        threads = limit
    threads = max(1, min(int(threads), limit))
    numba.set_num_threads(threads)
    return threads


def build_kernel_pack(grid: GridConfig, dynamics) -> KernelPack:
    tables = StateTables.build(grid)
    a_min, a_max, tdl_min, tdl_max = dynamics.kernel_constants()
    inv = tuple(1.0 / s for s in grid.spacings)
    return KernelPack(tables.coords[2], tables.cos_theta, tables.sin_theta,
                      inv, a_min, a_max, tdl_min, tdl_max)


def central_differences(v: ValueField, idx: tuple[int, int, int, int]):
    """Left/right/central derivative approximations at one node.

    Returns (d_minus, d_plus, grad) where grad is the central average used
    as the costate.  Spacing division is done by reciprocal multiplication,
    matching the compiled kernels bitwise.
    """
    c = float(v.data[idx])
    dm = []
    dp = []
    g = []
    for axis in range(4):
        inv = 1.0 / v.grid.spacings[axis]
        vm = neighbor_value(v, idx, axis, -1)
        vp = neighbor_value(v, idx, axis, +1)
        dminus = (c - vm) * inv
        dplus = (vp - c) * inv
        dm.append(dminus)
        dp.append(dplus)
        g.append((dplus + dminus) * 0.5)
    return tuple(dm), tuple(dp), Gradient4(*g)


def grid_state(grid: GridConfig, idx: tuple[int, int, int, int]):
    return tuple(state_at(grid, d, idx[d]) for d in range(4))


def step_point(v_t: ValueField, v_0: ValueField, idx: tuple[int, int, int, int],
               dt: float, dynamics: Dynamics) -> float:
    """Single-pass update of one node through the generic dynamics interface."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    dm, dp, grad = central_differences(v_t, idx)
    state = grid_state(v_t.grid, idx)
    h = dynamics.hamiltonian(state, grad)
    alpha = dynamics.dissipation_coeffs(state, grad)
    # + is the stable orientation of the viscosity when marching backward;
    # each axis term collapses to one-sided upwind differencing
    for d in range(4):
        h = h + alpha[d] * ((dp[d] - dm[d]) * 0.5)
    vnew = h * dt + float(v_t.data[idx])
    v0 = float(v_0.data[idx])
    return v0 if vnew > v0 else vnew


def _require_same_grid(a: ValueField, b: ValueField):
    if not a.grid.same_geometry(b.grid):
        raise GridMismatchError("value fields live on different grids")
    if a.kind != b.kind:
        raise GridMismatchError(f"element kinds differ: {a.kind} vs {b.kind}")


def _sweep_arrays_float(vt: np.ndarray, v0: np.ndarray, out: np.ndarray,
                        grid: GridConfig, pack: KernelPack, dt: float) -> float:
    n1, n2, n3, n4 = grid.dims
    p0, p1, p2, p3 = grid.periodic
    eps_blocks = np.zeros(n1, dtype=np.float64)
    _kernels.sweep_batch_float(
        vt, v0, out, n1, n2, n3, n4, p0, p1, p2, p3,
        pack.vtab, pack.costab, pack.sintab,
        pack.inv_dx[0], pack.inv_dx[1], pack.inv_dx[2], pack.inv_dx[3],
        pack.a_min, pack.a_max, pack.tdl_min, pack.tdl_max,
        dt, eps_blocks)
    return float(eps_blocks.max())


def sweep(v_t: ValueField, v_0: ValueField, dt: float, dynamics: Dynamics,
          threads: int | None = None):
    """One full-grid update; returns (new field, max |dV|).  Input untouched.

    Dynamics exposing ``kernel_constants`` run through the compiled batch
    kernel; anything else falls back to the per-node interface path.
    """
    _require_same_grid(v_t, v_0)
    if v_t.kind != ELEM_FLOAT64:
        raise ValueError("sweep operates on float64 fields; see fixedpoint.solve_fixed")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    grid = v_t.grid
    out = np.empty_like(v_t.data)
    if hasattr(dynamics, "kernel_constants"):
        set_thread_count(threads)
        pack = build_kernel_pack(grid, dynamics)
        eps = _sweep_arrays_float(v_t.data.ravel(), v_0.data.ravel(),
                                  out.ravel(), grid, pack, dt)
    else:
        eps = 0.0
        n1, n2, n3, n4 = grid.dims
        for idx in itertools.product(range(n1), range(n2), range(n3), range(n4)):
            r = step_point(v_t, v_0, idx, dt, dynamics)
            out[idx] = r
            d = abs(r - float(v_t.data[idx]))
            if d > eps:
                eps = d
    return ValueField(grid, out, ELEM_FLOAT64), eps


def compute_timestep(alpha_max, grid: GridConfig, cfl_factor: float = 0.9) -> float:
    """Stable explicit step from per-axis speed bounds: cfl / sum(a_d / dx_d)."""
    if not 0.0 < cfl_factor <= 1.0:
        raise ValueError("cfl_factor must be in (0, 1]")
    denom = 0.0
    for d in range(4):
        if alpha_max[d] < 0.0:
            raise ValueError("alpha bounds must be non-negative")
        denom += alpha_max[d] / grid.spacings[d]
    if denom == 0.0:
        raise ValueError("all alpha bounds are zero: static system has no time scale")
    return cfl_factor / denom


def _fixed_horizon_steps(horizon: float, dt: float) -> int:
    return max(1, math.ceil(horizon / dt))


def solve(v_0: ValueField, dynamics: Dynamics, settings: SolveSettings,
          threads: int | None = None):
    """Run the single-pass scheme to the configured horizon or to convergence.

    Returns (final field, report).  Raises
    :class:`NumericalInstabilityError` naming the iteration if the field
    stops being finite mid-solve.
    """
    if v_0.kind != ELEM_FLOAT64:
        raise ValueError("solve takes a float64 initial field")
    grid = v_0.grid
    if settings.dt_override is not None:
        dt = settings.dt_override
    else:
        dt = compute_timestep(dynamics.global_alpha_bound(grid), grid, settings.cfl_factor)

    use_kernel = hasattr(dynamics, "kernel_constants")
    if use_kernel:
        set_thread_count(threads)
        pack = build_kernel_pack(grid, dynamics)

    v0_flat = v_0.data.ravel()
    cur = v_0.data.copy()
    nxt = np.empty_like(cur)

    if settings.mode == MODE_FIXED_HORIZON:
        planned = _fixed_horizon_steps(settings.horizon, dt)
    else:
        planned = settings.max_iterations

    report = SolveReport(iterations=0, dt=dt, final_epsilon=math.inf, wall_time=0.0)
    t_start = time.perf_counter()
    iteration = 0
    eps = math.inf
    while iteration < planned:
        iteration += 1
        t0 = time.perf_counter()
        if use_kernel:
            eps = _sweep_arrays_float(cur.ravel(), v0_flat, nxt.ravel(), grid, pack, dt)
        else:
            cur_f = ValueField(grid, cur, ELEM_FLOAT64)
            swept, eps = sweep(cur_f, v_0, dt, dynamics)
            nxt = swept.data
        report.sweep_timings.append(time.perf_counter() - t0)
        if not np.isfinite(nxt).all():
            raise NumericalInstabilityError(iteration)
        cur, nxt = nxt, cur
        if settings.mode == MODE_CONVERGE and eps < settings.epsilon_threshold:
            break
    if settings.mode == MODE_CONVERGE and eps >= settings.epsilon_threshold:
        report.warnings.append(
            f"convergence not reached after {iteration} iterations (eps={eps:.3e})")
    report.iterations = iteration
    report.final_epsilon = eps
    report.wall_time = time.perf_counter() - t_start
    return ValueField(grid, cur, ELEM_FLOAT64), report


# ---------------------------------------------------------------------------
# Three-pass reference path
# ---------------------------------------------------------------------------

def all_differences(data: np.ndarray, grid: GridConfig):
    """Vectorized left/right differences for every node.

    Returns (dm, dp): lists of four arrays each.  Element-for-element this
    evaluates the same expressions as :func:`central_differences`.
    """
    dm = []
    dp = []
    for axis in range(4):
        inv = 1.0 / grid.spacings[axis]
        vm = np.empty_like(data)
        vp = np.empty_like(data)
        src = np.moveaxis(data, axis, 0)
        dst_m = np.moveaxis(vm, axis, 0)
        dst_p = np.moveaxis(vp, axis, 0)
        dst_m[1:] = src[:-1]
        dst_p[:-1] = src[1:]
        if grid.periodic[axis]:
            dst_m[0] = src[-1]
            dst_p[-1] = src[0]
        else:
            dst_m[0] = 2.0 * src[0] - src[1]
            dst_p[-1] = 2.0 * src[-1] - src[-2]
        dm.append((data - vm) * inv)
        dp.append((vp - data) * inv)
    return dm, dp


def reference_solve(v_0: ValueField, dynamics: Dynamics, settings: SolveSettings,
                    threads: int | None = None):
    """Three-pass oracle path with global dissipation and per-iteration dt.

    Pass one evaluates Hamiltonians and the global range of each central
    derivative; pass two bounds |dH/dp_d| over that range (evaluated at the
    corners of the range box, exact for bang-bang dynamics) and applies the
    dissipation while tracking per-axis maxima; pass three Euler-steps with
    the stable dt from those maxima and clamps against the initial values.
    """
    del threads  # single-threaded by design
    if v_0.kind != ELEM_FLOAT64:
        raise ValueError("reference_solve takes a float64 initial field")
    grid = v_0.grid
    n1, n2, n3, n4 = grid.dims
    states = {}
    for idx in itertools.product(range(n1), range(n2), range(n3), range(n4)):
        states[idx] = grid_state(grid, idx)

    cur = v_0.data.copy()
    v0 = v_0.data
    report = SolveReport(iterations=0, dt=math.nan, final_epsilon=math.inf,
                         wall_time=0.0, alpha_max_history=[])
    t_start = time.perf_counter()
    elapsed_horizon = 0.0
    iteration = 0
    eps = math.inf
    while True:
        iteration += 1
        t0 = time.perf_counter()
        dm, dp = all_differences(cur, grid)
        g = [(dp[d] + dm[d]) * 0.5 for d in range(4)]
        lo = [float(g[d].min()) for d in range(4)]
        hi = [float(g[d].max()) for d in range(4)]
        corners = [Gradient4(*c) for c in itertools.product(*zip(lo, hi))]

        ham = np.empty_like(cur)
        diss = np.zeros_like(cur)
        alpha_max = [0.0, 0.0, 0.0, 0.0]
        for idx, z in states.items():
            grad = Gradient4(float(g[0][idx]), float(g[1][idx]),
                             float(g[2][idx]), float(g[3][idx]))
            ham[idx] = dynamics.hamiltonian(z, grad)
            a0 = a1 = a2 = a3 = 0.0
            for corner in corners:
                c0, c1, c2, c3 = dynamics.dissipation_coeffs(z, corner)
                if c0 > a0:
                    a0 = c0
                if c1 > a1:
                    a1 = c1
                if c2 > a2:
                    a2 = c2
                if c3 > a3:
                    a3 = c3
            acc = 0.0
            acc += a0 * ((float(dp[0][idx]) - float(dm[0][idx])) * 0.5)
            acc += a1 * ((float(dp[1][idx]) - float(dm[1][idx])) * 0.5)
            acc += a2 * ((float(dp[2][idx]) - float(dm[2][idx])) * 0.5)
            acc += a3 * ((float(dp[3][idx]) - float(dm[3][idx])) * 0.5)
            diss[idx] = acc
            if a0 > alpha_max[0]:
                alpha_max[0] = a0
            if a1 > alpha_max[1]:
                alpha_max[1] = a1
            if a2 > alpha_max[2]:
                alpha_max[2] = a2
            if a3 > alpha_max[3]:
                alpha_max[3] = a3

        report.alpha_max_history.append(tuple(alpha_max))
        if settings.dt_override is not None:
            dt = settings.dt_override
        else:
            dt = compute_timestep(alpha_max, grid, settings.cfl_factor)
        nxt = np.minimum(v0, (ham + diss) * dt + cur)
        if not np.isfinite(nxt).all():
            raise NumericalInstabilityError(iteration)
        eps = float(np.abs(nxt - cur).max())
        cur = nxt
        report.sweep_timings.append(time.perf_counter() - t0)
        report.dt = dt
        elapsed_horizon += dt
        if settings.mode == MODE_FIXED_HORIZON:
            if elapsed_horizon >= settings.horizon or iteration >= settings.max_iterations:
                break
        else:
            if eps < settings.epsilon_threshold or iteration >= settings.max_iterations:
                break
    report.iterations = iteration
    report.final_epsilon = eps
    report.wall_time = time.perf_counter() - t_start
    return ValueField(grid, cur, ELEM_FLOAT64), report
