import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjstream.fixedpoint import Q5_27, fixed_add, fixed_mul, to_fixed, ULP
from hjstream.grid import (GridConfig, StateTables, ValueField, linear_index,
                           neighbor_value, state_at, unravel_index)


def plain_grid(dims=(4, 4, 4, 4)):
    return GridConfig(dims, (0.0, 0.0, 0.0, 0.0), (1.0, 1.0, 1.0, 1.0),
                      (False, False, False, False))


class TestGridConfig:
    def test_rejects_small_axes(self):
        with pytest.raises(ValueError, match="central differencing"):
            plain_grid((2, 4, 4, 4))

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(ValueError, match="spacing"):
            GridConfig((4, 4, 4, 4), (0,) * 4, (1.0, 0.0, 1.0, 1.0), (False,) * 4)

    def test_periodic_angle_axis_must_tile_the_circle(self):
        # 36 * 0.17 = 6.12 sits 2.6% away from a full turn
        with pytest.raises(ValueError, match="angle axis"):
            GridConfig((4, 4, 4, 36), (0, 0, 0, -math.pi),
                       (1.0, 1.0, 1.0, 0.17), (False, False, False, True))
        GridConfig((4, 4, 4, 36), (0, 0, 0, -math.pi),
                   (1.0, 1.0, 1.0, 2.0 * math.pi / 36.0), (False, False, False, True))

    def test_strides_match_linear_index(self):
        g = plain_grid((3, 4, 5, 6))
        s = g.strides
        assert linear_index(g, 1, 0, 0, 0) == s[0]
        assert linear_index(g, 0, 1, 0, 0) == s[1]
        assert linear_index(g, 0, 0, 1, 0) == s[2]
        assert linear_index(g, 0, 0, 0, 1) == s[3]


class TestLinearIndex:
    def test_origin_and_innermost(self):
        g = plain_grid()
        assert linear_index(g, 0, 0, 0, 0) == 0
        assert linear_index(g, 0, 0, 0, 1) == 1

    def test_full_grid_outer_stride(self, full_grid):
        # one step on the outer axis jumps a whole 60*20*36 block
        assert linear_index(full_grid, 1, 0, 0, 0) == 43200

    def test_roundtrip_exhaustive_3x3x3x3(self):
        g = plain_grid((3, 3, 3, 3))
        seen = set()
        for idx in itertools.product(range(3), repeat=4):
            n = linear_index(g, *idx)
            assert unravel_index(g, n) == idx
            seen.add(n)
        assert seen == set(range(g.total_points))

    def test_out_of_range(self):
        g = plain_grid()
        with pytest.raises(IndexError):
            linear_index(g, 4, 0, 0, 0)
        with pytest.raises(IndexError):
            linear_index(g, 0, 0, 0, -1)
        with pytest.raises(IndexError):
            unravel_index(g, g.total_points)


class TestStateAt:
    def test_first_node_is_the_minimum(self):
        g = GridConfig((4, 4, 4, 4), (-1.5, 2.0, 0.0, -3.0), (0.1, 0.1, 0.1, 0.1),
                       (False,) * 4)
        for axis in range(4):
            assert state_at(g, axis, 0) == g.mins[axis]

    def test_one_step_of_tenth_meter(self):
        g = GridConfig((4, 4, 4, 4), (-1.5, 2.0, 0.0, -3.0), (0.1, 0.1, 0.1, 0.1),
                       (False,) * 4)
        assert state_at(g, 1, 1) == pytest.approx(2.0 + 0.1, abs=0.0)

    def test_last_angle_node(self):
        # non-periodic here: 36 * 0.17 does not tile the circle
        g = GridConfig((4, 4, 4, 36), (0, 0, 0, -math.pi), (1, 1, 1, 0.17),
                       (False,) * 4)
        expected = -math.pi + 35 * 0.17
        assert state_at(g, 3, 35) == expected
        assert state_at(g, 3, 35) == pytest.approx(-math.pi + 5.95, abs=1e-12)
        # cross-check against an independently generated coordinate list
        coords = [-math.pi + i * 0.17 for i in range(36)]
        for i, c in enumerate(coords):
            assert state_at(g, 3, i) == c

    def test_coords_strictly_increasing(self, full_grid):
        for axis in range(4):
            c = full_grid.axis_coords(axis)
            assert (np.diff(c) > 0).all()
            assert c[0] == full_grid.mins[axis]

    def test_spacing_differences_exact_for_dyadic_spacings(self):
        # power-of-two spacings subtract without rounding
        g = GridConfig((8, 8, 8, 8), (-2.0, -1.0, 0.0, -4.0),
                       (0.25, 0.5, 0.125, 0.25), (False,) * 4)
        for axis in range(4):
            c = g.axis_coords(axis)
            assert (np.diff(c) == g.spacings[axis]).all()

    def test_bounds(self):
        g = plain_grid()
        with pytest.raises(IndexError):
            state_at(g, 0, 4)
        with pytest.raises(IndexError):
            state_at(g, 5, 0)


class TestStateTables:
    def test_trig_unit_circle_float(self, full_grid):
        t = StateTables.build(full_grid)
        err = np.abs(t.cos_theta**2 + t.sin_theta**2 - 1.0).max()
        assert err < 1e-12

    def test_trig_unit_circle_fixed(self, full_grid):
        t = StateTables.build(full_grid)
        one = to_fixed(1.0)
        worst = 0
        for c, s in zip(t.cos_theta, t.sin_theta):
            cq, sq = to_fixed(float(c)), to_fixed(float(s))
            mag = fixed_add(fixed_mul(cq, cq), fixed_mul(sq, sq))
            worst = max(worst, abs(mag.raw - one.raw))
        assert worst * ULP <= 2 * ULP

    def test_tables_match_scalar_trig(self, full_grid):
        t = StateTables.build(full_grid)
        for l in range(full_grid.dims[3]):
            theta = state_at(full_grid, 3, l)
            assert t.cos_theta[l] == math.cos(theta)
            assert t.sin_theta[l] == math.sin(theta)


class TestValueField:
    def test_shape_validation(self):
        g = plain_grid()
        with pytest.raises(ValueError, match="elements"):
            ValueField(g, np.zeros(7))

    def test_rejects_non_finite(self):
        g = plain_grid()
        data = np.zeros(g.dims)
        data[1, 2, 3, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            ValueField(g, data)

    def test_dtype_checked(self):
        g = plain_grid()
        with pytest.raises(ValueError, match="dtype"):
            ValueField(g, np.zeros(g.dims, dtype=np.float32))


class TestNeighborValue:
    def test_interior(self):
        g = plain_grid()
        f = ValueField(g, np.zeros(g.dims))
        f.data[1, 1, 1, 1] = 5.0
        f.data[2, 1, 1, 1] = 7.0
        assert neighbor_value(f, (1, 1, 1, 1), 0, +1) == 7.0
        assert neighbor_value(f, (2, 1, 1, 1), 0, -1) == 5.0

    def test_ghost_extrapolation_at_low_edge(self):
        g = plain_grid()
        f = ValueField(g, np.zeros(g.dims))
        f.data[0, 0, 0, 0] = 1.0
        f.data[1, 0, 0, 0] = 2.0
        assert neighbor_value(f, (0, 0, 0, 0), 0, -1) == 0.0  # 2*1 - 2

    def test_periodic_wrap(self):
        g = GridConfig((4, 4, 4, 8), (0, 0, 0, -math.pi), (1, 1, 1, 2 * math.pi / 8),
                       (False, False, False, True))
        f = ValueField(g, np.zeros(g.dims))
        f.data[0, 0, 0, 0] = 3.5
        assert neighbor_value(f, (0, 0, 0, 7), 3, +1) == 3.5

    @given(value=st.floats(-50, 50, allow_nan=False))
    @settings(max_examples=25, deadline=None)
    def test_constant_field_everywhere(self, value):
        g = GridConfig((3, 3, 3, 4), (0, 0, 0, -math.pi), (1, 1, 1, 2 * math.pi / 4),
                       (False, False, False, True))
        f = ValueField(g, np.full(g.dims, value))
        for idx in itertools.product(range(3), range(3), range(3), range(4)):
            for axis in range(4):
                for direction in (-1, +1):
                    assert neighbor_value(f, idx, axis, direction) == value

    def test_rejects_fixed_fields(self):
        from hjstream.grid import ELEM_Q5_27
        g = plain_grid()
        f = ValueField(g, np.zeros(g.dims, dtype=np.int32), ELEM_Q5_27)
        with pytest.raises(ValueError, match="float64"):
            neighbor_value(f, (0, 0, 0, 0), 0, 1)
