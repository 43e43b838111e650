"""Extended Dubins car dynamics and the generic interface the solver consumes.

State is (x, y, v, theta), control is (a, delta):

    dx = v cos(theta),  dy = v sin(theta),  dv = a,  dtheta = v tan(delta) / L

The Hamiltonian maximizes the gradient-flow inner product over the control
box.  Because the flow is affine in ``a`` and monotone in ``tan(delta)`` on
the admissible steering interval, the maximizer is bang-bang: each control
sits at a box corner selected by a sign test.  Ties break toward the upper
bound (the objective value is identical either way).

Any 4D system exposing the same five operations (flow, optimal_control,
hamiltonian, dissipation_coeffs, global_alpha_bound) plugs into the solver
unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence, runtime_checkable

from .grid import GridConfig


class CarState(NamedTuple):
    x: float
    y: float
    v: float
    theta: float


class CarControl(NamedTuple):
    a: float
    delta: float


class Gradient4(NamedTuple):
    """Spatial derivatives of the value function along (x, y, v, theta)."""

    p1: float
    p2: float
    p3: float
    p4: float


@dataclass(frozen=True)
class DubinsParams:
    """Control bounds and wheelbase of the car."""

    a_min: float = -1.5
    a_max: float = 1.5
    delta_min: float = -math.pi / 18.0
    delta_max: float = math.pi / 18.0
    wheelbase: float = 0.3

    def __post_init__(self):
        if not self.a_min < self.a_max:
            raise ValueError("need a_min < a_max")
        if not self.delta_min < self.delta_max:
            raise ValueError("need delta_min < delta_max")
        if not self.wheelbase > 0.0:
            raise ValueError("wheelbase must be positive")
        if max(abs(self.delta_min), abs(self.delta_max)) >= math.pi / 2.0:
            raise ValueError("steering bounds must stay clear of +-pi/2")

    def clamp(self, control: Sequence[float]) -> CarControl:
        a, delta = control
        a = min(max(a, self.a_min), self.a_max)
        delta = min(max(delta, self.delta_min), self.delta_max)
        return CarControl(a, delta)


@runtime_checkable
class Dynamics(Protocol):
    """What the solver needs from a 4D system."""

    def flow(self, state: Sequence[float], control) -> tuple[float, float, float, float]: ...

    def optimal_control(self, state: Sequence[float], grad: Sequence[float]): ...

    def hamiltonian(self, state: Sequence[float], grad: Sequence[float]) -> float: ...

    def dissipation_coeffs(self, state: Sequence[float],
                           grad: Sequence[float]) -> tuple[float, float, float, float]: ...

    def global_alpha_bound(self, grid: GridConfig) -> tuple[float, float, float, float]: ...


@dataclass(frozen=True)
class DubinsCar:
    params: DubinsParams = DubinsParams()

    def flow(self, state, control) -> tuple[float, float, float, float]:
        """State velocity under ``control``."""
        _, _, v, theta = state
        a, delta = control
        p = self.params
        if not (p.a_min <= a <= p.a_max and p.delta_min <= delta <= p.delta_max):
            raise ValueError(f"control {(a, delta)} outside bounds")
        tdl = math.tan(delta) / p.wheelbase
        return (v * math.cos(theta), v * math.sin(theta), a, v * tdl)

    def optimal_control(self, state, grad) -> CarControl:
        """Bang-bang maximizer of grad . flow over the control box."""
        p = self.params
        a = p.a_max if grad[2] >= 0.0 else p.a_min
        v = state[2]
        delta = p.delta_max if grad[3] * v >= 0.0 else p.delta_min
        return CarControl(a, delta)

    def hamiltonian(self, state, grad) -> float:
        u = self.optimal_control(state, grad)
        f = self.flow(state, u)
        return grad[0] * f[0] + grad[1] * f[1] + grad[2] * f[2] + grad[3] * f[3]

    def dissipation_coeffs(self, state, grad) -> tuple[float, float, float, float]:
        """Per-axis |flow| at the optimal control (the local viscosity weights)."""
        u = self.optimal_control(state, grad)
        f = self.flow(state, u)
        return (abs(f[0]), abs(f[1]), abs(f[2]), abs(f[3]))

    def global_alpha_bound(self, grid: GridConfig) -> tuple[float, float, float, float]:
        """Per-axis supremum of |flow| over grid states and admissible controls."""
        p = self.params
        lo, hi = grid.extent(2)
        v_max = max(abs(lo), abs(hi))
        a_max = max(abs(p.a_min), abs(p.a_max))
        t_max = max(abs(math.tan(p.delta_min)), abs(math.tan(p.delta_max))) / p.wheelbase
        return (v_max, v_max, a_max, v_max * t_max)

    def kernel_constants(self) -> tuple[float, float, float, float]:
        """(a_min, a_max, tan(delta_min)/L, tan(delta_max)/L) for the compiled sweep.

        Computed with the same expressions as :meth:`flow` so the fast path
        and the per-point interface path agree bitwise.
        """
        p = self.params
        return (p.a_min, p.a_max,
                math.tan(p.delta_min) / p.wheelbase,
                math.tan(p.delta_max) / p.wheelbase)
