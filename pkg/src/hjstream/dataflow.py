"""Transaction-level model of the streaming hardware datapath.

The accelerator streams the value array out of external memory exactly once
per iteration, in linear (row-major) order, through a set of on-chip FIFO
line buffers.  Each of the ``n_pe`` processing elements produces the output
for nodes with angle index ``l % n_pe == idx`` from nine tap positions into
the buffered window.  A node can be discarded once the stream has advanced
past its last stencil use, so the whole window spans

    2 * N2 * N3 * N4 + 1

positions - the reuse distance from the (i-1) neighbor to the (i+1)
neighbor - independent of N1.  Split round-robin across the lines, each line
needs ceil(window / n_pe) slots, and one slot fewer provably breaks
correctness (see the tightness test).

The model is one-grid-point-per-line-per-cycle; it exists to validate reuse
distances, banking, and the cycle/latency accounting, not to mimic gates.
Outputs are produced by the same compiled scalar update the batch sweep
uses, so streamed results are bit-identical to batch results by
construction *and* checked by test.

Cycle estimate per iteration: N_total / n_pe core cycles plus a fill charge
(half-full line buffers before the first output, N2*N3*N4 / n_pe) plus the
PE pipeline depth.  The depth is the single calibration constant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fixedpoint import ULP, build_fixed_pack, to_fixed_array
from .grid import (ELEM_FLOAT64, ELEM_Q5_27, GridConfig, GridMismatchError,
                   ValueField)
from .solver import build_kernel_pack, _require_same_grid


class TapAlignmentError(AssertionError):
    """A PE tried to read a stream position not held in its line buffer."""


class StreamSetupError(ValueError):
    """Grid/config combination the streaming schedule cannot serve."""


@dataclass(frozen=True)
class StreamConfig:
    n_pe: int = 4
    pipeline_depth: int = 233
    clock_period: float = 4e-9

    def __post_init__(self):
        if self.n_pe < 1:
            raise ValueError("need at least one processing element")
        if self.pipeline_depth < 0:
            raise ValueError("pipeline_depth cannot be negative")
        if not self.clock_period > 0.0:
            raise ValueError("clock_period must be positive")


def reuse_window(grid: GridConfig) -> int:
    """Stream positions spanned from the (i-1) tap to the (i+1) tap."""
    _, n2, n3, n4 = grid.dims
    return 2 * n2 * n3 * n4 + 1


def buffer_sizes(grid: GridConfig, n_pe: int,
                 onchip_budget: int | None = None) -> list[int]:
    """Per-line FIFO capacities (slots) covering the reuse window.

    Depends only on N2, N3, N4.  If a budget (total slots) is given and the
    requirement exceeds it, a warning is emitted - the model still runs.
    """
    if n_pe < 1:
        raise ValueError("need at least one line")
    per_line = -(-reuse_window(grid) // n_pe)  # ceil
    caps = [per_line] * n_pe
    if onchip_budget is not None and sum(caps) > onchip_budget:
        warnings.warn(
            f"line buffers need {sum(caps)} slots, over the on-chip budget "
            f"of {onchip_budget}", RuntimeWarning, stacklevel=2)
    return caps


class LineBufferModel:
    """Round-robin FIFO lines with random-access taps inside the live window.

    Stream position ``p`` lives in line ``p % n_pe`` at ordinal ``p // n_pe``;
    each line is a ring that recycles its oldest slot on push.  ``strict``
    taps fail loudly when asked for a recycled position; the lenient mode
    returns whatever now occupies the slot, which is what undersized
    hardware would read.
    """

    def __init__(self, grid: GridConfig, n_pe: int, dtype,
                 capacities: list[int] | None = None, strict: bool = True):
        self.n_pe = n_pe
        self.capacities = list(capacities) if capacities is not None else buffer_sizes(grid, n_pe)
        if len(self.capacities) != n_pe or min(self.capacities) < 1:
            raise StreamSetupError("need one positive capacity per line")
        self.strict = strict
        self.rings = [np.zeros(c, dtype=dtype) for c in self.capacities]
        self.newest = [-1] * n_pe
        self.pushes = 0

    def push(self, pos: int, value):
        m = pos % self.n_pe
        q = pos // self.n_pe
        if q != self.newest[m] + 1:
            raise TapAlignmentError(f"stream position {pos} pushed out of order")
        self.rings[m][q % self.capacities[m]] = value
        self.newest[m] = q
        self.pushes += 1

    def tap(self, pos: int):
        m = pos % self.n_pe
        q = pos // self.n_pe
        if q > self.newest[m]:
            raise TapAlignmentError(
                f"tap at stream position {pos} before it entered line {m}")
        if q <= self.newest[m] - self.capacities[m] and self.strict:
            raise TapAlignmentError(
                f"tap at stream position {pos} after line {m} discarded it "
                f"(capacity {self.capacities[m]} too small)")
        return self.rings[m][q % self.capacities[m]]


def stream_sweep(v_t: ValueField, v_0: ValueField, dt: float, dynamics,
                 cfg: StreamConfig, capacities: list[int] | None = None,
                 strict_taps: bool = True,
                 stats: dict | None = None) -> ValueField:
    """One sweep through the streaming schedule; bit-identical to the batch sweep.

    Consumes the input exactly once in linear order, produces outputs in
    linear order, applies the same boundary rules as the batch kernel from
    in-window taps.  ``capacities``/``strict_taps`` exist for the
    undersized-buffer demonstration; pass a ``stats`` dict to receive the
    stream read count.
    """
    _require_same_grid(v_t, v_0)
    grid = v_t.grid
    n1, n2, n3, n4 = grid.dims
    if n4 % cfg.n_pe != 0:
        raise StreamSetupError(
            f"angle axis ({n4}) must divide evenly across {cfg.n_pe} PEs")
    if grid.periodic[0]:
        raise StreamSetupError("a periodic outer axis cannot be streamed; "
                               "its wrap distance exceeds the buffer window")
    if not hasattr(dynamics, "kernel_constants"):
        raise StreamSetupError("streaming needs dynamics with compiled-kernel support")

    pack = build_kernel_pack(grid, dynamics)
    fixed = v_t.kind == ELEM_Q5_27
    if fixed:
        fpack = build_fixed_pack(pack, dt)
        vtab, costab, sintab = fpack.vtab, fpack.costab, fpack.sintab
        inv0, inv1, inv2, inv3 = fpack.inv_dx
        a_min, a_max = fpack.a_min, fpack.a_max
        tdl_min, tdl_max = fpack.tdl_min, fpack.tdl_max
        dt_c = fpack.dt
        src = v_t.data.astype(np.int64).ravel()
        v0_flat = v_0.data.astype(np.int64).ravel()
        out = np.empty_like(src)
        update = _kernels.point_update_fixed
        ghost = _kernels.ghost_fixed
        buf_dtype = np.int64
    else:
        vtab, costab, sintab = pack.vtab, pack.costab, pack.sintab
        inv0, inv1, inv2, inv3 = pack.inv_dx
        a_min, a_max = pack.a_min, pack.a_max
        tdl_min, tdl_max = pack.tdl_min, pack.tdl_max
        dt_c = dt
        src = v_t.data.ravel()
        v0_flat = v_0.data.ravel()
        out = np.empty_like(src)
        update = _kernels.point_update_float
        ghost = _kernels.ghost_float
        buf_dtype = np.float64

    s0 = n2 * n3 * n4
    s1 = n3 * n4
    s2 = n4
    total = grid.total_points
    per1, per2, per3 = grid.periodic[1], grid.periodic[2], grid.periodic[3]

    buf = LineBufferModel(grid, cfg.n_pe, buf_dtype, capacities, strict_taps)
    next_in = 0
    i = j = k = l = 0
    for q in range(total):
        horizon = min(q + s0, total - 1)
        while next_in <= horizon:
            buf.push(next_in, src[next_in])
            next_in += 1
        c = buf.tap(q)
        if i > 0:
            vm0 = buf.tap(q - s0)
        else:
            vm0 = ghost(c, buf.tap(q + s0))
        if i < n1 - 1:
            vp0 = buf.tap(q + s0)
        else:
            vp0 = ghost(c, buf.tap(q - s0))
        if j > 0:
            vm1 = buf.tap(q - s1)
        elif per1:
            vm1 = buf.tap(q + (n2 - 1) * s1)
        else:
            vm1 = ghost(c, buf.tap(q + s1))
        if j < n2 - 1:
            vp1 = buf.tap(q + s1)
        elif per1:
            vp1 = buf.tap(q - (n2 - 1) * s1)
        else:
            vp1 = ghost(c, buf.tap(q - s1))
        if k > 0:
            vm2 = buf.tap(q - s2)
        elif per2:
            vm2 = buf.tap(q + (n3 - 1) * s2)
        else:
            vm2 = ghost(c, buf.tap(q + s2))
        if k < n3 - 1:
            vp2 = buf.tap(q + s2)
        elif per2:
            vp2 = buf.tap(q - (n3 - 1) * s2)
        else:
            vp2 = ghost(c, buf.tap(q - s2))
        if l > 0:
            vm3 = buf.tap(q - 1)
        elif per3:
            vm3 = buf.tap(q + (n4 - 1))
        else:
            vm3 = ghost(c, buf.tap(q + 1))
        if l < n4 - 1:
            vp3 = buf.tap(q + 1)
        elif per3:
            vp3 = buf.tap(q - (n4 - 1))
        else:
            vp3 = ghost(c, buf.tap(q - 1))

        pe = l % cfg.n_pe
        if pe != q % cfg.n_pe:
            raise TapAlignmentError("PE index does not match stream phase")
        if fixed:
            r, _sat = update(c, _val(vm0), _val(vp0), _val(vm1), _val(vp1),
                             _val(vm2), _val(vp2), _val(vm3), _val(vp3),
                             vtab[k], costab[l], sintab[l],
                             inv0, inv1, inv2, inv3,
                             a_min, a_max, tdl_min, tdl_max,
                             dt_c, v0_flat[q])
        else:
            r = update(c, vm0, vp0, vm1, vp1, vm2, vp2, vm3, vp3,
                       vtab[k], costab[l], sintab[l],
                       inv0, inv1, inv2, inv3,
                       a_min, a_max, tdl_min, tdl_max,
                       dt_c, v0_flat[q])
        out[q] = r

        l += 1
        if l == n4:
            l = 0
            k += 1
            if k == n3:
                k = 0
                j += 1
                if j == n2:
                    j = 0
                    i += 1

    if buf.pushes != total:
        raise TapAlignmentError(
            f"stream pushed {buf.pushes} elements, grid has {total}")
    if stats is not None:
        stats["stream_reads"] = buf.pushes
        stats["outputs"] = total
    if fixed:
        return ValueField(grid, out.reshape(grid.dims).astype(np.int32), ELEM_Q5_27)
    return ValueField(grid, out.reshape(grid.dims), ELEM_FLOAT64)


def _val(x):
    """Unwrap (value, saturation) pairs from the fixed ghost helper."""
    return x[0] if isinstance(x, tuple) else x


def estimate_cycles(grid: GridConfig, iterations: int,
                    cfg: StreamConfig) -> tuple[int, float]:
    """Clock cycles and wall latency for ``iterations`` full sweeps.

    cycles = iterations * (N_total/n_pe + fill),
    fill   = N2*N3*N4/n_pe + pipeline_depth.
    """
    if iterations < 0:
        raise ValueError("iterations cannot be negative")
    _, n2, n3, n4 = grid.dims
    core = -(-grid.total_points // cfg.n_pe)
    fill = -(-(n2 * n3 * n4) // cfg.n_pe) + cfg.pipeline_depth
    cycles = iterations * (core + fill)
    return cycles, cycles * cfg.clock_period
