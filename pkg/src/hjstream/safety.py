"""Obstacle-avoidance runtime: initial value fields, membership queries,
safe-control extraction, and the simulated plant.

The unsafe set around each cone is the disc of its effective radius; its
signed distance sqrt((x-xo)^2 + (y-yo)^2) - R seeds the solve, independent
of speed and heading.  Multiple cones combine by pointwise minimum (union
of unsafe sets).

At run time the car's continuous state is scored by multilinear (16-corner)
interpolation of the solved field; the filter overrides the driver whenever
that value drops under the intervention threshold, steering with the
bang-bang control extracted from an interpolated central-difference
gradient.  The plant integrates with classic RK4 at a fixed rate and clamps
into the grid box (room walls and speed limits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import CarControl, CarState, Dynamics, Gradient4
from .grid import ELEM_FLOAT64, GridConfig, ValueField, TWO_PI

INTERVENTION_THRESHOLD = 0.15


class OutOfDomainError(ValueError):
    """Queried state lies outside the grid extents."""


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("obstacle radius must be positive")

    def signed_distance(self, x: float, y: float) -> float:
        return math.hypot(x - self.x, y - self.y) - self.radius


@dataclass(frozen=True)
class Environment:
    """Cones inside a rectangular room centered on the origin."""

    obstacles: tuple[Obstacle, ...]
    room_width: float = 5.9
    room_height: float = 3.953

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not (self.room_width > 0.0 and self.room_height > 0.0):
            raise ValueError("room dimensions must be positive")
        hw, hh = self.room_width / 2.0, self.room_height / 2.0
        for ob in self.obstacles:
            if abs(ob.x) > hw or abs(ob.y) > hh:
                raise ValueError(f"obstacle at ({ob.x}, {ob.y}) outside the room")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        hw, hh = self.room_width / 2.0, self.room_height / 2.0
        return (-hw, hw, -hh, hh)


def build_initial_values(env: Environment, grid: GridConfig) -> ValueField:
    """Min over cones of the planar signed distance, broadcast over (v, theta)."""
    if not env.obstacles:
        raise ValueError("need at least one obstacle")
    xs = grid.axis_coords(0)[:, None]
    ys = grid.axis_coords(1)[None, :]
    planar = np.full((grid.dims[0], grid.dims[1]), np.inf)
    for ob in env.obstacles:
        d = np.sqrt((xs - ob.x) ** 2 + (ys - ob.y) ** 2) - ob.radius
        planar = np.minimum(planar, d)
    data = np.broadcast_to(planar[:, :, None, None], grid.dims).copy()
    return ValueField(grid, data, ELEM_FLOAT64)


def _cell(grid: GridConfig, axis: int, x: float) -> tuple[int, float]:
    """Lower node index and fractional offset of ``x`` along ``axis``.

    Periodic axes wrap; others raise when outside the node extent.
    """
    n = grid.dims[axis]
    t = (x - grid.mins[axis]) / grid.spacings[axis]
    if grid.periodic[axis]:
        t = t % n
        i = int(t)
        if i >= n:  # guard the t == n edge after float wrap
            i, t = 0, 0.0
        return i, t - i
    if t < 0.0 or t > n - 1:
        lo, hi = grid.extent(axis)
        raise OutOfDomainError(
            f"coordinate {x} outside [{lo}, {hi}] on axis {axis}")
    i = int(t)
    if i >= n - 1:  # top node: interpolate from the last cell
        i = n - 2
    return i, t - i


def interpolate_value(v: ValueField, state: CarState) -> float:
    """Multilinear interpolation of the field at a continuous state."""
    if v.kind != ELEM_FLOAT64:
        raise ValueError("interpolation needs a float64 field (convert fixed first)")
    grid = v.grid
    idx = []
    frac = []
    for axis, x in enumerate(state):
        i, f = _cell(grid, axis, x)
        idx.append(i)
        frac.append(f)
    total = 0.0
    for corner in range(16):
        w = 1.0
        at = []
        for axis in range(4):
            hi = (corner >> axis) & 1
            w *= frac[axis] if hi else 1.0 - frac[axis]
            j = idx[axis] + hi
            if grid.periodic[axis]:
                j %= grid.dims[axis]
            at.append(j)
        total += w * float(v.data[tuple(at)])
    return total


def should_intervene(v: ValueField, state: CarState,
                     threshold: float = INTERVENTION_THRESHOLD) -> bool:
    """True when the interpolated value drops strictly under the threshold."""
    return interpolate_value(v, state) < threshold


def value_gradient(v: ValueField, state: CarState) -> Gradient4:
    """Central differences of the interpolated field, one grid spacing wide.

    Probes are clamped into the domain near the walls and the slope is taken
    over the actual probe separation, degrading to one-sided there.
    """
    grid = v.grid
    g = []
    for axis in range(4):
        h = grid.spacings[axis]
        lo_x, hi_x = list(state), list(state)
        lo_x[axis] -= h
        hi_x[axis] += h
        if not grid.periodic[axis]:
            a, b = grid.extent(axis)
            lo_x[axis] = min(max(lo_x[axis], a), b)
            hi_x[axis] = min(max(hi_x[axis], a), b)
        span = hi_x[axis] - lo_x[axis]
        if span == 0.0:  # degenerate single-cell axis
            g.append(0.0)
            continue
        vp = interpolate_value(v, CarState(*hi_x))
        vm = interpolate_value(v, CarState(*lo_x))
        g.append((vp - vm) / span)
    return Gradient4(*g)


def safe_control(v: ValueField, state: CarState, dynamics: Dynamics) -> CarControl:
    """Control that climbs the value function fastest (the override action)."""
    grad = value_gradient(v, state)
    return dynamics.optimal_control(state, grad)


def wrap_angle(theta: float) -> float:
    """Into [-pi, pi); already-wrapped angles pass through unchanged."""
    if -math.pi <= theta < math.pi:
        return theta
    return (theta + math.pi) % TWO_PI - math.pi


def simulate_step(state: CarState, control: CarControl, dt: float,
                  dynamics: Dynamics) -> CarState:
    """Classic fourth-order Runge-Kutta step of the car under a held control."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")

    def f(s):
        return dynamics.flow(s, control)

    k1 = f(state)
    k2 = f(CarState(*(s + 0.5 * dt * d for s, d in zip(state, k1))))
    k3 = f(CarState(*(s + 0.5 * dt * d for s, d in zip(state, k2))))
    k4 = f(CarState(*(s + dt * d for s, d in zip(state, k3))))
    nxt = [s + dt * (a + 2.0 * b + 2.0 * c + d) / 6.0
           for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
    nxt[3] = wrap_angle(nxt[3])
    return CarState(*nxt)


@dataclass(frozen=True)
class FilterDecision:
    control: CarControl
    intervening: bool
    value: float


def filter_decision(v: ValueField, state: CarState, user_control,
                    dynamics: Dynamics,
                    threshold: float = INTERVENTION_THRESHOLD) -> FilterDecision:
    value = interpolate_value(v, state)
    if value < threshold:
        return FilterDecision(safe_control(v, state, dynamics), True, value)
    return FilterDecision(dynamics.params.clamp(user_control), False, value)


def filter_loop(v: ValueField, state: CarState, user_control,
                dynamics: Dynamics,
                threshold: float = INTERVENTION_THRESHOLD) -> CarControl:
    """The per-tick safety filter: user control unless too close to the tube."""
    return filter_decision(v, state, user_control, dynamics, threshold).control


def clamp_state(state: CarState, grid: GridConfig) -> CarState:
    """Project position and speed into the grid box; heading just wraps."""
    vals = list(state)
    for axis in range(3):
        lo, hi = grid.extent(axis)
        vals[axis] = min(max(vals[axis], lo), hi)
    vals[3] = wrap_angle(vals[3])
    return CarState(*vals)


@dataclass
class SafetyRuntime:
    """Holds the active value field and advances the filtered plant.

    A re-solve may run elsewhere; :meth:`install_brt` swaps the field in
    atomically between steps, and until then the filter keeps using the last
    valid one (``stale`` is advertised meanwhile).
    """

    dynamics: Dynamics
    brt: ValueField
    threshold: float = INTERVENTION_THRESHOLD
    step_dt: float = 0.02
    stale: bool = False

    def mark_stale(self):
        self.stale = True

    def install_brt(self, brt: ValueField):
        self.brt = brt
        self.stale = False

    def decide(self, state: CarState, user_control) -> FilterDecision:
        return filter_decision(self.brt, state, user_control,
                               self.dynamics, self.threshold)

    def step(self, state: CarState, user_control) -> tuple[CarState, FilterDecision]:
        decision = self.decide(state, user_control)
        nxt = simulate_step(state, decision.control, self.step_dt, self.dynamics)
        return clamp_state(nxt, self.brt.grid), decision
