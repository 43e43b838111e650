"""Q5.27 fixed-point scalars and the fixed-point instantiation of the solver.

The format is a 32-bit signed word with 5 integer bits (sign included) and
27 fractional bits: representable range [-16, 16 - 2**-27], resolution
2**-27 ~ 7.45e-9.  Conversion and multiplication round to nearest, ties to
even; additions are exact; everything saturates instead of wrapping, and
saturation events are counted so range violations are observable.

:func:`solve_fixed` runs the identical single-pass schedule as the float
solver but entirely in this arithmetic: reciprocal spacings, the time step,
and the state/trig tables are converted once up front, so no division (and
no transcendental) happens inside the sweep - mirroring a datapath that has
neither.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import (ELEM_FLOAT64, ELEM_Q5_27, GridConfig, GridMismatchError,
                   ValueField)
from .solver import (MODE_CONVERGE, MODE_FIXED_HORIZON, KernelPack,
                     SolveReport, SolveSettings, build_kernel_pack,
                     compute_timestep, _fixed_horizon_steps, _require_same_grid,
                     set_thread_count)

FRAC_BITS = 27
SCALE = 1 << FRAC_BITS
RAW_MAX = 2**31 - 1
RAW_MIN = -(2**31)
ULP = 2.0**-FRAC_BITS


class FixedPointConversionError(ValueError):
    """Input cannot be converted to Q5.27 (NaN)."""


class FixedPointRangeError(ValueError):
    """A value that must be representable exceeds the Q5.27 range."""


def _sat_raw(raw: int) -> int:
    if raw > RAW_MAX:
        return RAW_MAX
    if raw < RAW_MIN:
        return RAW_MIN
    return raw


@dataclass(frozen=True)
class Q5_27:
    """One fixed-point scalar; ``raw`` is the underlying 32-bit word."""

    raw: int

    def __post_init__(self):
        if not (RAW_MIN <= self.raw <= RAW_MAX):
            raise FixedPointRangeError(f"raw word {self.raw} outside 32-bit range")

    @classmethod
    def from_float(cls, value: float) -> "Q5_27":
        return to_fixed(value)

    def to_float(self) -> float:
        # exact: |raw| < 2**31 and the scale is a power of two
        return self.raw / SCALE

    def __add__(self, other: "Q5_27") -> "Q5_27":
        return fixed_add(self, other)

    def __sub__(self, other: "Q5_27") -> "Q5_27":
        return fixed_sub(self, other)

    def __mul__(self, other: "Q5_27") -> "Q5_27":
        return fixed_mul(self, other)

    def __neg__(self) -> "Q5_27":
        return Q5_27(_sat_raw(-self.raw))


def to_fixed(value: float) -> Q5_27:
    """Round-to-nearest-even conversion; out-of-range inputs saturate."""
    if math.isnan(value):
        raise FixedPointConversionError("cannot convert NaN to fixed point")
    if value >= 32.0:
        return Q5_27(RAW_MAX)
    if value <= -32.0:
        return Q5_27(RAW_MIN)
    return Q5_27(_sat_raw(round(value * SCALE)))


def fixed_add(a: Q5_27, b: Q5_27) -> Q5_27:
    """Exact sum, saturated on overflow."""
    return Q5_27(_sat_raw(a.raw + b.raw))


def fixed_sub(a: Q5_27, b: Q5_27) -> Q5_27:
    return Q5_27(_sat_raw(a.raw - b.raw))


def fixed_mul(a: Q5_27, b: Q5_27) -> Q5_27:
    """Exact 64-bit product, rounded back to Q5.27 (ties to even), saturated."""
    p = a.raw * b.raw
    q = p >> FRAC_BITS
    r = p & (SCALE - 1)
    tie = 1 << (FRAC_BITS - 1)
    if r > tie or (r == tie and (q & 1) == 1):
        q += 1
    return Q5_27(_sat_raw(q))


def to_fixed_array(values: np.ndarray, what: str = "array") -> np.ndarray:
    """Vectorized conversion to raw words (int64); raises if anything is out
    of range - array conversions are for constants that must be exact-ish."""
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise FixedPointConversionError(f"{what} contains non-finite entries")
    if np.abs(values).max(initial=0.0) >= 16.0:
        raise FixedPointRangeError(f"{what} has entries outside [-16, 16)")
    return np.rint(values * SCALE).astype(np.int64)


def to_real_field(field: ValueField) -> ValueField:
    """Exact float64 view of a fixed field (float fields pass through)."""
    if field.kind == ELEM_FLOAT64:
        return field
    data = field.data.astype(np.float64) * ULP
    return ValueField(field.grid, data, ELEM_FLOAT64)


def max_abs_error(a: ValueField, b: ValueField) -> float:
    """Largest |A - B| over the grid, in real value, across element types."""
    if not a.grid.same_geometry(b.grid):
        raise GridMismatchError("cannot compare fields on different grids")
    ra = to_real_field(a).data
    rb = to_real_field(b).data
    return float(np.abs(ra - rb).max())


@dataclass(frozen=True)
class FixedKernelPack:
    """Q5.27 twin of :class:`solver.KernelPack` (raw words in int64)."""

    vtab: np.ndarray
    costab: np.ndarray
    sintab: np.ndarray
    inv_dx: tuple[int, int, int, int]
    a_min: int
    a_max: int
    tdl_min: int
    tdl_max: int
    dt: int


def build_fixed_pack(pack: KernelPack, dt: float) -> FixedKernelPack:
    """Convert solver constants to Q5.27 once; rejects unrepresentable ones."""
    for name, value in (("dt", dt),
                        ("a_min", pack.a_min), ("a_max", pack.a_max),
                        ("tan(delta_min)/L", pack.tdl_min),
                        ("tan(delta_max)/L", pack.tdl_max)):
        if not abs(value) < 16.0:
            raise FixedPointRangeError(f"constant {name}={value} outside Q5.27 range")
    for d, inv in enumerate(pack.inv_dx):
        if not abs(inv) < 16.0:
            raise FixedPointRangeError(
                f"reciprocal spacing 1/dx[{d}]={inv} outside Q5.27 range; "
                f"spacings below 1/16 are not representable")
    return FixedKernelPack(
        to_fixed_array(pack.vtab, "speed table"),
        to_fixed_array(pack.costab, "cos table"),
        to_fixed_array(pack.sintab, "sin table"),
        tuple(to_fixed(v).raw for v in pack.inv_dx),
        to_fixed(pack.a_min).raw, to_fixed(pack.a_max).raw,
        to_fixed(pack.tdl_min).raw, to_fixed(pack.tdl_max).raw,
        to_fixed(dt).raw)


def _sweep_arrays_fixed(vt: np.ndarray, v0: np.ndarray, out: np.ndarray,
                        grid: GridConfig, fpack: FixedKernelPack):
    n1, n2, n3, n4 = grid.dims
    p0, p1, p2, p3 = grid.periodic
    eps_blocks = np.zeros(n1, dtype=np.int64)
    sat_blocks = np.zeros(n1, dtype=np.int64)
    _kernels.sweep_batch_fixed(
        vt, v0, out, n1, n2, n3, n4, p0, p1, p2, p3,
        fpack.vtab, fpack.costab, fpack.sintab,
        fpack.inv_dx[0], fpack.inv_dx[1], fpack.inv_dx[2], fpack.inv_dx[3],
        fpack.a_min, fpack.a_max, fpack.tdl_min, fpack.tdl_max,
        fpack.dt, eps_blocks, sat_blocks)
    return int(eps_blocks.max()), int(sat_blocks.sum())


def sweep_fixed(v_t: ValueField, v_0: ValueField, dt: float, dynamics,
                threads: int | None = None):
    """One fixed-point batch sweep; returns (field, eps_real, saturations)."""
    _require_same_grid(v_t, v_0)
    if v_t.kind != ELEM_Q5_27:
        raise ValueError("sweep_fixed expects Q5.27 fields")
    set_thread_count(threads)
    pack = build_kernel_pack(v_t.grid, dynamics)
    fpack = build_fixed_pack(pack, dt)
    vt = v_t.data.astype(np.int64).ravel()
    v0 = v_0.data.astype(np.int64).ravel()
    out = np.empty_like(vt)
    eps_raw, sat = _sweep_arrays_fixed(vt, v0, out, v_t.grid, fpack)
    field = ValueField(v_t.grid, out.astype(np.int32), ELEM_Q5_27)
    return field, eps_raw * ULP, sat


def solve_fixed(v_0: ValueField, dynamics, settings: SolveSettings,
                threads: int | None = None):
    """Run the single-pass schedule entirely in Q5.27; returns (field, report).

    The float initial field is converted once on entry (it must be within
    the representable range); any saturation during the solve lands in the
    report as a count plus a warning.
    """
    if v_0.kind != ELEM_FLOAT64:
        raise ValueError("solve_fixed converts a float64 initial field")
    if not hasattr(dynamics, "kernel_constants"):
        raise ValueError("solve_fixed needs dynamics with compiled-kernel support")
    peak = float(np.abs(v_0.data).max())
    if peak >= 16.0:
        raise FixedPointRangeError(
            f"initial values reach {peak}, outside the Q5.27 range [-16, 16)")
    grid = v_0.grid
    if settings.dt_override is not None:
        dt = settings.dt_override
    else:
        dt = compute_timestep(dynamics.global_alpha_bound(grid), grid, settings.cfl_factor)
    set_thread_count(threads)
    pack = build_kernel_pack(grid, dynamics)
    fpack = build_fixed_pack(pack, dt)

    v0_raw = to_fixed_array(v_0.data, "initial values").ravel()
    cur = v0_raw.copy()
    nxt = np.empty_like(cur)

    if settings.mode == MODE_FIXED_HORIZON:
        planned = _fixed_horizon_steps(settings.horizon, dt)
    else:
        planned = settings.max_iterations

    report = SolveReport(iterations=0, dt=dt, final_epsilon=math.inf, wall_time=0.0)
    t_start = time.perf_counter()
    iteration = 0
    eps = math.inf
    total_sat = 0
    while iteration < planned:
        iteration += 1
        t0 = time.perf_counter()
        eps_raw, sat = _sweep_arrays_fixed(cur, v0_raw, nxt, grid, fpack)
        report.sweep_timings.append(time.perf_counter() - t0)
        total_sat += sat
        eps = eps_raw * ULP
        cur, nxt = nxt, cur
        if settings.mode == MODE_CONVERGE and eps < settings.epsilon_threshold:
            break
    report.iterations = iteration
    report.final_epsilon = eps
    report.saturation_events = total_sat
    if total_sat > 0:
        report.warnings.append(
            f"{total_sat} saturation events: results are range-clamped, not exact")
    report.wall_time = time.perf_counter() - t_start
    field = ValueField(grid, cur.reshape(grid.dims).astype(np.int32), ELEM_Q5_27)
    return field, report
