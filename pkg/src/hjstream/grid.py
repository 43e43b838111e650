"""4D grid geometry, dense value storage, and neighbor access.

The value function lives on a dense row-major grid over (x, y, v, theta)
with the angle axis innermost, so streaming order equals memory order.
Boundary handling per axis:

* non-periodic: linear ghost extrapolation ``V_ghost = 2*V_edge - V_inner``,
  which preserves constant fields and the edge slope;
* periodic: wrap-around neighbor.

Coordinates along axis ``d`` are ``mins[d] + i * spacings[d]``.  Trig values
of the angle axis are precomputed once into lookup tables; every consumer
(batch solver, streaming datapath, reference path) reads the same tables so
results are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

ELEM_FLOAT64 = "float64"
ELEM_Q5_27 = "q5_27"

_ELEM_DTYPES = {ELEM_FLOAT64: np.float64, ELEM_Q5_27: np.int32}

# axis index of the heading angle in the canonical (x, y, v, theta) layout
THETA_AXIS = 3


class GridMismatchError(ValueError):
    """Two fields that must share a grid do not."""


@dataclass(frozen=True)
class GridConfig:
    """Geometry of a 4D grid: point counts, lower bounds, spacings, wrap flags.

    Units in the driving application are (m, m, m/s, rad); nothing in the
    index math depends on them.
    """

    dims: tuple[int, int, int, int]
    mins: tuple[float, float, float, float]
    spacings: tuple[float, float, float, float]
    periodic: tuple[bool, bool, bool, bool] = (False, False, False, True)

    def __post_init__(self):
        if len(self.dims) != 4 or len(self.mins) != 4 or len(self.spacings) != 4 \
                or len(self.periodic) != 4:
            raise ValueError("grid configuration needs exactly four axes")
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "mins", tuple(float(m) for m in self.mins))
        object.__setattr__(self, "spacings", tuple(float(s) for s in self.spacings))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        for d, n in enumerate(self.dims):
            if n < 3:
                raise ValueError(f"axis {d} has {n} points; central differencing needs >= 3")
        for d, s in enumerate(self.spacings):
            if not (s > 0.0) or not math.isfinite(s):
                raise ValueError(f"axis {d} spacing must be positive, got {s}")
        # A periodic angle axis must actually tile the circle.
        if self.periodic[THETA_AXIS]:
            span = self.dims[THETA_AXIS] * self.spacings[THETA_AXIS]
            if abs(span - TWO_PI) > 0.01 * TWO_PI:
                raise ValueError(
                    f"periodic angle axis spans {span:.6f}, more than 1% away from 2*pi"
                )

    @property
    def total_points(self) -> int:
        n1, n2, n3, n4 = self.dims
        return n1 * n2 * n3 * n4

    @property
    def strides(self) -> tuple[int, int, int, int]:
        """Row-major linear strides (in elements) per axis."""
        _, n2, n3, n4 = self.dims
        return (n2 * n3 * n4, n3 * n4, n4, 1)

    def extent(self, axis: int) -> tuple[float, float]:
        """Coordinates of the first and last grid node along ``axis``."""
        return (self.mins[axis], state_at(self, axis, self.dims[axis] - 1))

    def axis_coords(self, axis: int) -> np.ndarray:
        """All node coordinates along ``axis`` (matches ``state_at`` bitwise)."""
        n = self.dims[axis]
        return self.mins[axis] + np.arange(n, dtype=np.float64) * self.spacings[axis]

    def same_geometry(self, other: "GridConfig") -> bool:
        return (self.dims == other.dims and self.mins == other.mins
                and self.spacings == other.spacings)


def linear_index(grid: GridConfig, i: int, j: int, k: int, l: int) -> int:
    """Row-major offset of grid node (i, j, k, l); the angle axis is contiguous."""
    n1, n2, n3, n4 = grid.dims
    if not (0 <= i < n1 and 0 <= j < n2 and 0 <= k < n3 and 0 <= l < n4):
        raise IndexError(f"index ({i}, {j}, {k}, {l}) out of range for dims {grid.dims}")
    return ((i * n2 + j) * n3 + k) * n4 + l


def unravel_index(grid: GridConfig, offset: int) -> tuple[int, int, int, int]:
    """Inverse of :func:`linear_index`."""
    if not (0 <= offset < grid.total_points):
        raise IndexError(f"offset {offset} out of range for dims {grid.dims}")
    _, n2, n3, n4 = grid.dims
    rem, l = divmod(offset, n4)
    rem, k = divmod(rem, n3)
    i, j = divmod(rem, n2)
    return (i, j, k, l)


def state_at(grid: GridConfig, axis: int, i: int) -> float:
    """Coordinate of node ``i`` along ``axis``."""
    if not (0 <= axis < 4):
        raise IndexError(f"axis {axis} out of range")
    if not (0 <= i < grid.dims[axis]):
        raise IndexError(f"index {i} out of range for axis {axis} with {grid.dims[axis]} points")
    return grid.mins[axis] + i * grid.spacings[axis]


@dataclass(frozen=True)
class StateTables:
    """Per-axis node coordinates plus cos/sin lookup tables for the angle axis.

    Built once per grid; the trig entries are computed with ``math.cos`` /
    ``math.sin`` so they agree bitwise with scalar dynamics evaluations at
    the same node angles.
    """

    coords: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    cos_theta: np.ndarray
    sin_theta: np.ndarray

    @classmethod
    def build(cls, grid: GridConfig) -> "StateTables":
        coords = tuple(grid.axis_coords(d) for d in range(4))
        thetas = coords[THETA_AXIS]
        cos_t = np.array([math.cos(t) for t in thetas], dtype=np.float64)
        sin_t = np.array([math.sin(t) for t in thetas], dtype=np.float64)
        return cls(coords, cos_t, sin_t)


@dataclass
class ValueField:
    """A scalar field on a :class:`GridConfig`.

    ``kind`` selects the element type: float64 values, or raw int32 words of
    the Q5.27 fixed-point format (value = raw * 2**-27).
    """

    grid: GridConfig
    data: np.ndarray
    kind: str = ELEM_FLOAT64

    def __post_init__(self):
        if self.kind not in _ELEM_DTYPES:
            raise ValueError(f"unknown element kind {self.kind!r}")
        want = _ELEM_DTYPES[self.kind]
        if self.data.dtype != want:
            raise ValueError(f"{self.kind} field needs dtype {want}, got {self.data.dtype}")
        if self.data.shape != self.grid.dims:
            if self.data.size == self.grid.total_points:
                self.data = self.data.reshape(self.grid.dims)
            else:
                raise ValueError(
                    f"data has {self.data.size} elements, grid wants {self.grid.total_points}"
                )
        if self.kind == ELEM_FLOAT64 and not np.isfinite(self.data).all():
            raise ValueError("float value field contains non-finite entries")

    @classmethod
    def full(cls, grid: GridConfig, value: float, kind: str = ELEM_FLOAT64) -> "ValueField":
        data = np.full(grid.dims, value, dtype=_ELEM_DTYPES[kind])
        return cls(grid, data, kind)

    def copy(self) -> "ValueField":
        return ValueField(self.grid, self.data.copy(), self.kind)


def neighbor_value(field: ValueField, idx: tuple[int, int, int, int],
                   axis: int, direction: int) -> float:
    """Value of the neighbor of ``idx`` one step along ``axis``.

    Interior neighbors come straight from storage; a step past a
    non-periodic edge returns the linear ghost ``2*V_edge - V_inner``; a
    periodic axis wraps.
    """
    if field.kind != ELEM_FLOAT64:
        raise ValueError("neighbor_value operates on float64 fields")
    if direction not in (-1, 1):
        raise ValueError(f"direction must be -1 or +1, got {direction}")
    i, j, k, l = idx
    linear_index(field.grid, i, j, k, l)  # bounds check
    n = field.grid.dims[axis]
    pos = idx[axis] + direction
    if 0 <= pos < n:
        nb = list(idx)
        nb[axis] = pos
        return float(field.data[tuple(nb)])
    if field.grid.periodic[axis]:
        nb = list(idx)
        nb[axis] = pos % n
        return float(field.data[tuple(nb)])
    # ghost: edge point is idx itself, inner point is one step back inside
    inner = list(idx)
    inner[axis] = idx[axis] - direction
    c = float(field.data[tuple(idx)])
    return 2.0 * c - float(field.data[tuple(inner)])
