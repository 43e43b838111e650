"""Run configuration: one YAML file describes grid, car, room, solver,
datapath, and streaming parameters.

Example::

    grid:
      dims: [60, 60, 20, 36]
      mins: [-2.95, -1.9765, 0.0, -3.141592653589793]
      spacings: [0.1, 0.067, 0.2, 0.17453292519943295]
      periodic: [false, false, false, true]
    dynamics:
      a_min: -1.5
      a_max: 1.5
      delta_min: -0.17453292519943295
      delta_max: 0.17453292519943295
      wheelbase: 0.3
    environment:
      room: {width: 5.9, height: 3.953}
      obstacles:
        - {x: 0.0, y: 0.0, r: 0.75}
    solver:
      mode: fixed_horizon
      horizon: 0.5
      dt_override: 0.007497
      cfl_factor: 0.9
      epsilon_threshold: 1.0e-3
      max_iterations: 10000
    datapath: float
    stream:
      n_pe: 4
      pipeline_depth: 233
      clock_period: 4.0e-9
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

import yaml

from .dataflow import StreamConfig
from .dynamics import DubinsCar, DubinsParams
from .grid import GridConfig
from .safety import Environment, Obstacle
from .solver import SolveSettings

DATAPATH_FLOAT = "float"
DATAPATH_FIXED = "fixed"


class ConfigError(ValueError):
    """Unusable run configuration."""


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    dynamics: DubinsParams = DubinsParams()
    environment: Environment = Environment((Obstacle(0.0, 0.0, 0.75),))
    solver: SolveSettings = SolveSettings()
    datapath: str = DATAPATH_FLOAT
    stream: StreamConfig = StreamConfig()

    def __post_init__(self):
        if self.datapath not in (DATAPATH_FLOAT, DATAPATH_FIXED):
            raise ConfigError(f"datapath must be float or fixed, got {self.datapath!r}")
        x_lo, x_hi = self.grid.extent(0)
        y_lo, y_hi = self.grid.extent(1)
        rx_lo, rx_hi, ry_lo, ry_hi = self.environment.bounds
        if x_lo > rx_lo or x_hi < rx_hi or y_lo > ry_lo or y_hi < ry_hi:
            raise ConfigError(
                f"grid x/y extents [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] do not "
                f"cover the room [{rx_lo}, {rx_hi}] x [{ry_lo}, {ry_hi}]")
        if self.grid.dims[3] % self.stream.n_pe != 0:
            raise ConfigError(
                f"angle axis ({self.grid.dims[3]}) must divide across "
                f"{self.stream.n_pe} PEs")

    def car(self) -> DubinsCar:
        return DubinsCar(self.dynamics)


def _expect(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing {key!r} in {where}")
    return mapping[key]


def _vec4(raw, where: str):
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise ConfigError(f"{where} must be a list of four values")
    return tuple(raw)


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level of the config must be a mapping")
    try:
        graw = _expect(doc, "grid", "config")
        grid = GridConfig(
            dims=_vec4(_expect(graw, "dims", "grid"), "grid.dims"),
            mins=_vec4(_expect(graw, "mins", "grid"), "grid.mins"),
            spacings=_vec4(_expect(graw, "spacings", "grid"), "grid.spacings"),
            periodic=_vec4(graw.get("periodic", [False, False, False, True]),
                           "grid.periodic"),
        )
        draw = doc.get("dynamics", {})
        dyn = DubinsParams(
            a_min=float(draw.get("a_min", -1.5)),
            a_max=float(draw.get("a_max", 1.5)),
            delta_min=float(draw.get("delta_min", DubinsParams().delta_min)),
            delta_max=float(draw.get("delta_max", DubinsParams().delta_max)),
            wheelbase=float(draw.get("wheelbase", 0.3)),
        )
        eraw = doc.get("environment", {})
        room = eraw.get("room", {})
        obstacles = tuple(
            Obstacle(float(o["x"]), float(o["y"]), float(o.get("r", o.get("radius", 0.75))))
            for o in eraw.get("obstacles", [{"x": 0.0, "y": 0.0, "r": 0.75}]))
        env = Environment(obstacles,
                          room_width=float(room.get("width", 5.9)),
                          room_height=float(room.get("height", 3.953)))
        sraw = doc.get("solver", {})
        dt_override = sraw.get("dt_override")
        settings = SolveSettings(
            mode=str(sraw.get("mode", "fixed_horizon")),
            horizon=float(sraw.get("horizon", 0.5)),
            dt_override=None if dt_override is None else float(dt_override),
            cfl_factor=float(sraw.get("cfl_factor", 0.9)),
            epsilon_threshold=float(sraw.get("epsilon_threshold", 1e-3)),
            max_iterations=int(sraw.get("max_iterations", 10_000)),
        )
        traw = doc.get("stream", {})
        stream = StreamConfig(
            n_pe=int(traw.get("n_pe", 4)),
            pipeline_depth=int(traw.get("pipeline_depth", 233)),
            clock_period=float(traw.get("clock_period", 4e-9)),
        )
        return RunConfig(grid=grid, dynamics=dyn, environment=env,
                         solver=settings, datapath=str(doc.get("datapath", "float")),
                         stream=stream)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)
