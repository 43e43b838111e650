import math
from pathlib import Path

import numpy as np
import pytest

from hjstream.dynamics import DubinsCar
from hjstream.fixedpoint import solve_fixed
from hjstream.grid import GridConfig, ValueField
from hjstream.safety import Environment, Obstacle, build_initial_values
from hjstream.solver import SolveSettings, solve

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"

# 60x60x20x36 grid over the room, 0.1 / 0.067 / 0.2 spacings, full-turn angle axis
FULL_DIMS = (60, 60, 20, 36)
FULL_MINS = (-2.95, -1.9765, 0.0, -math.pi)
FULL_SPACINGS = (0.1, 0.067, 0.2, 2.0 * math.pi / 36.0)

FULL_SETTINGS = SolveSettings(mode="fixed_horizon", horizon=0.5, dt_override=0.007497)


@pytest.fixture(scope="session")
def car() -> DubinsCar:
    return DubinsCar()


@pytest.fixture(scope="session")
def full_grid() -> GridConfig:
    return GridConfig(FULL_DIMS, FULL_MINS, FULL_SPACINGS,
                      (False, False, False, True))


@pytest.fixture(scope="session")
def small_grid() -> GridConfig:
    return GridConfig((8, 8, 6, 8), (-2.0, -2.0, 0.0, -math.pi),
                      (0.5, 0.5, 0.5, 2.0 * math.pi / 8.0),
                      (False, False, False, True))


@pytest.fixture(scope="session")
def env1() -> Environment:
    return Environment((Obstacle(0.0, 0.0, 0.75),))


@pytest.fixture(scope="session")
def env2() -> Environment:
    return Environment((Obstacle(-1.1, -0.7, 0.75), Obstacle(1.2, 0.6, 0.75)))


@pytest.fixture(scope="session")
def env3() -> Environment:
    return Environment((Obstacle(-1.6, 0.8, 0.75), Obstacle(0.1, -0.9, 0.75),
                        Obstacle(1.7, 0.5, 0.75)))


@pytest.fixture(scope="session")
def env1_v0(full_grid, env1) -> ValueField:
    return build_initial_values(env1, full_grid)


@pytest.fixture(scope="session")
def env1_float_brt(env1_v0, car):
    """Solved field + report for the single-cone room (float datapath)."""
    return solve(env1_v0, car, FULL_SETTINGS)


@pytest.fixture(scope="session")
def env1_fixed_brt(env1_v0, car):
    """Same problem through the Q5.27 datapath."""
    return solve_fixed(env1_v0, car, FULL_SETTINGS)


@pytest.fixture(scope="session")
def env_brts(full_grid, car, env1_float_brt, env2, env3):
    """Float BRTs for all three room layouts, keyed 1..3."""
    out = {1: env1_float_brt[0]}
    for key, env in ((2, env2), (3, env3)):
        v0 = build_initial_values(env, full_grid)
        field, _ = solve(v0, car, FULL_SETTINGS)
        out[key] = field
    return out


def make_cone_field(grid: GridConfig, x0: float = 0.0, y0: float = 0.0,
                    radius: float = 0.75) -> ValueField:
    xs = grid.axis_coords(0)[:, None]
    ys = grid.axis_coords(1)[None, :]
    planar = np.sqrt((xs - x0) ** 2 + (ys - y0) ** 2) - radius
    data = np.broadcast_to(planar[:, :, None, None], grid.dims).copy()
    return ValueField(grid, data)


def random_field(grid: GridConfig, seed: int, lo: float = -4.0,
                 hi: float = 4.0) -> ValueField:
    rng = np.random.default_rng(seed)
    return ValueField(grid, rng.uniform(lo, hi, grid.dims))
