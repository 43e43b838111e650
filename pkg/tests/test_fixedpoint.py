import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjstream import _kernels
from hjstream.dynamics import DubinsCar
from hjstream.fixedpoint import (FRAC_BITS, RAW_MAX, RAW_MIN, SCALE, ULP,
                                 FixedPointConversionError,
                                 FixedPointRangeError, Q5_27, fixed_add,
                                 fixed_mul, fixed_sub, max_abs_error,
                                 solve_fixed, sweep_fixed, to_fixed,
                                 to_fixed_array, to_real_field)
from hjstream.grid import ELEM_Q5_27, GridConfig, GridMismatchError, ValueField
from hjstream.solver import SolveSettings, solve, sweep
from conftest import make_cone_field


# ---------------------------------------------------------------------------
# exact-rational reference model
# ---------------------------------------------------------------------------

def model_convert(value: float) -> int:
    """Round-to-nearest-even conversion done in exact rational arithmetic."""
    scaled = Fraction(value) * SCALE
    low = math.floor(scaled)
    frac = scaled - low
    if frac > Fraction(1, 2) or (frac == Fraction(1, 2) and low % 2 == 1):
        low += 1
    return max(RAW_MIN, min(RAW_MAX, low))


def model_add(a: int, b: int) -> int:
    return max(RAW_MIN, min(RAW_MAX, a + b))


def model_mul(a: int, b: int) -> int:
    exact = Fraction(a * b, SCALE)
    low = math.floor(exact)
    frac = exact - low
    if frac > Fraction(1, 2) or (frac == Fraction(1, 2) and low % 2 == 1):
        low += 1
    return max(RAW_MIN, min(RAW_MAX, low))


raws = st.integers(RAW_MIN, RAW_MAX)
small_raws = st.integers(-(1 << 29), 1 << 29)  # three of these never saturate a sum


class TestConversion:
    def test_one(self):
        assert to_fixed(1.0).raw == 134217728 == 2**27

    def test_one_ulp(self):
        assert to_fixed(7.45e-9).raw == 1
        assert Q5_27(1).to_float() == ULP == pytest.approx(7.45e-9, rel=1e-3)

    def test_saturates_out_of_range(self):
        assert to_fixed(20.0).raw == RAW_MAX
        assert to_fixed(-20.0).raw == RAW_MIN
        assert to_fixed(math.inf).raw == RAW_MAX
        assert to_fixed(-math.inf).raw == RAW_MIN

    def test_nan_rejected(self):
        with pytest.raises(FixedPointConversionError):
            to_fixed(math.nan)

    def test_ties_round_to_even(self):
        assert to_fixed(1.5 * ULP).raw == 2
        assert to_fixed(0.5 * ULP).raw == 0
        assert to_fixed(2.5 * ULP).raw == 2
        assert to_fixed(-1.5 * ULP).raw == -2

    @given(raw=raws)
    @settings(max_examples=200, deadline=None)
    def test_roundtrip_on_exact_multiples(self, raw):
        assert to_fixed(raw * ULP).raw == raw

    @given(value=st.floats(-20, 20, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_matches_rational_model(self, value):
        assert to_fixed(value).raw == model_convert(value)

    def test_raw_range_enforced(self):
        with pytest.raises(FixedPointRangeError):
            Q5_27(RAW_MAX + 1)


class TestArithmetic:
    def test_mul_exact_halving(self):
        assert fixed_mul(to_fixed(1.0), to_fixed(0.5)).to_float() == 0.5

    def test_mul_underflow_to_zero(self):
        assert fixed_mul(Q5_27(1), Q5_27(1)).raw == 0

    def test_add_saturates(self):
        # 12 + 12 pegs at the top of the range, checked against the
        # exact-integer model
        a = to_fixed(12.0)
        got = fixed_add(a, a)
        assert got.raw == RAW_MAX == model_add(a.raw, a.raw)
        assert got.to_float() == 16.0 - ULP

    def test_neg_saturates(self):
        assert (-Q5_27(RAW_MIN)).raw == RAW_MAX

    @given(a=raws, b=raws)
    @settings(max_examples=200, deadline=None)
    def test_add_commutative_and_modeled(self, a, b):
        x, y = Q5_27(a), Q5_27(b)
        assert fixed_add(x, y).raw == fixed_add(y, x).raw == model_add(a, b)

    @given(a=small_raws, b=small_raws, c=small_raws)
    @settings(max_examples=200, deadline=None)
    def test_add_associative_without_saturation(self, a, b, c):
        x, y, z = Q5_27(a), Q5_27(b), Q5_27(c)
        assert fixed_add(fixed_add(x, y), z).raw == fixed_add(x, fixed_add(y, z)).raw

    @given(a=raws)
    @settings(max_examples=200, deadline=None)
    def test_mul_identity(self, a):
        assert fixed_mul(Q5_27(a), to_fixed(1.0)).raw == a

    @given(a=raws, b=raws)
    @settings(max_examples=300, deadline=None)
    def test_mul_matches_rational_model(self, a, b):
        assert fixed_mul(Q5_27(a), Q5_27(b)).raw == model_mul(a, b)

    @given(a=raws, b=raws)
    @settings(max_examples=200, deadline=None)
    def test_compiled_helpers_match_scalar_ops(self, a, b):
        got_mul, _ = _kernels.q_mul(a, b)
        got_add, _ = _kernels.q_add(a, b)
        assert got_mul == fixed_mul(Q5_27(a), Q5_27(b)).raw
        assert got_add == fixed_add(Q5_27(a), Q5_27(b)).raw

    def test_array_conversion_matches_scalar(self):
        rng = np.random.default_rng(0)
        vals = rng.uniform(-15.9, 15.9, 257)
        raws_arr = to_fixed_array(vals, "test")
        for v, r in zip(vals, raws_arr):
            assert int(r) == to_fixed(float(v)).raw

    def test_array_conversion_range_checked(self):
        with pytest.raises(FixedPointRangeError):
            to_fixed_array(np.array([17.0]), "test")


class TestMaxAbsError:
    def grid(self):
        return GridConfig((3, 3, 3, 3), (0,) * 4, (1.0,) * 4, (False,) * 4)

    def test_identical(self):
        g = self.grid()
        f = ValueField.full(g, 1.0)
        assert max_abs_error(f, f) == 0.0

    def test_single_ulp_difference(self):
        g = self.grid()
        a = ValueField(g, np.zeros(g.dims, dtype=np.int32), ELEM_Q5_27)
        b = ValueField(g, np.zeros(g.dims, dtype=np.int32), ELEM_Q5_27)
        b.data[1, 1, 1, 1] = 1
        assert max_abs_error(a, b) == ULP

    def test_mixed_kinds(self):
        g = self.grid()
        a = ValueField.full(g, 0.5)
        b = ValueField(g, np.full(g.dims, to_fixed(0.5).raw, dtype=np.int32),
                       ELEM_Q5_27)
        assert max_abs_error(a, b) == 0.0

    def test_grid_mismatch(self):
        g = self.grid()
        other = GridConfig((3, 3, 3, 4), (0,) * 4, (1.0,) * 4, (False,) * 4)
        with pytest.raises(GridMismatchError):
            max_abs_error(ValueField.full(g, 0.0), ValueField.full(other, 0.0))


class TestSolveFixed:
    def test_constant_field_exact(self, small_grid, car):
        v0 = ValueField.full(small_grid, 1.25)
        field, report = solve_fixed(v0, car, SolveSettings(horizon=0.05,
                                                           dt_override=0.01))
        assert (to_real_field(field).data == 1.25).all()
        assert report.saturation_events == 0

    def test_initial_range_enforced(self, small_grid, car):
        v0 = ValueField.full(small_grid, 16.5)
        with pytest.raises(FixedPointRangeError):
            solve_fixed(v0, car, SolveSettings(horizon=0.05, dt_override=0.01))

    def test_too_fine_spacing_rejected(self, car):
        g = GridConfig((4, 4, 4, 4), (0, 0, 0, 0), (0.05, 1, 1, 1), (False,) * 4)
        v0 = ValueField.full(g, 0.0)
        with pytest.raises(FixedPointRangeError, match="spacing"):
            solve_fixed(v0, car, SolveSettings(horizon=0.05, dt_override=0.01))

    def test_error_growth_stays_bounded(self, car):
        # per-iteration divergence from the float path must not explode
        g = GridConfig((20, 20, 8, 12), (-2.0, -2.0, 0.0, -math.pi),
                       (0.2, 0.2, 0.3, 2 * math.pi / 12),
                       (False, False, False, True))
        v0 = make_cone_field(g)
        v0q = ValueField(g, to_fixed_array(v0.data, "v0").astype(np.int32),
                         ELEM_Q5_27)
        dt = 0.007497
        errs = {}
        cur_f, cur_q = v0, v0q
        for it in range(1, 68):
            cur_f, _ = sweep(cur_f, v0, dt, car)
            cur_q, _, sat = sweep_fixed(cur_q, v0q, dt, car)
            assert sat == 0
            if it in (10, 67):
                errs[it] = max_abs_error(cur_q, cur_f)
        assert errs[67] < 10.0 * errs[10]

    def test_matches_float_solution_closely(self, car):
        g = GridConfig((12, 12, 6, 8), (-1.5, -1.5, 0.0, -math.pi),
                       (0.25, 0.25, 0.4, 2 * math.pi / 8),
                       (False, False, False, True))
        v0 = make_cone_field(g)
        settings = SolveSettings(horizon=0.25, dt_override=0.01)
        qf, report = solve_fixed(v0, car, settings)
        ff, _ = solve(v0, car, settings)
        assert report.saturation_events == 0
        err = max_abs_error(qf, ff)
        assert 0.0 < err < 1e-5

    def test_saturation_is_counted_and_warned(self, small_grid, car):
        # +-12 on alternating nodes: differences of 24 scaled by 1/dx leave
        # the representable range; that must surface, not silently clamp
        data = np.full(small_grid.dims, 12.0)
        data[:, :, :, ::2] = -12.0
        v0 = ValueField(small_grid, data)
        _, report = solve_fixed(v0, car, SolveSettings(horizon=0.02,
                                                       dt_override=0.01))
        assert report.saturation_events > 0
        assert any("saturation" in w for w in report.warnings)

    def test_float_initial_field_required(self, small_grid, car):
        raw = ValueField(small_grid, np.zeros(small_grid.dims, dtype=np.int32),
                         ELEM_Q5_27)
        with pytest.raises(ValueError, match="float64"):
            solve_fixed(raw, car, SolveSettings(horizon=0.05, dt_override=0.01))

    def test_full_solve_never_saturates(self, env1_fixed_brt):
        # room diagonal keeps |V0| around 3.6, far inside the format's range
        _, report = env1_fixed_brt
        assert report.saturation_events == 0
        assert not report.warnings
