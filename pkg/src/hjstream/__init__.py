"""Grid-based 4D reachability solver with a streaming fixed-point datapath
model and a driving safety filter."""

from .grid import (ELEM_FLOAT64, ELEM_Q5_27, GridConfig, GridMismatchError,
                   StateTables, ValueField, linear_index, neighbor_value,
                   state_at, unravel_index)
from .dynamics import (CarControl, CarState, DubinsCar, DubinsParams,
                       Dynamics, Gradient4)
from .solver import (NumericalInstabilityError, SolveReport, SolveSettings,
                     central_differences, compute_timestep, reference_solve,
                     set_thread_count, solve, step_point, sweep)
from .fixedpoint import (Q5_27, FixedPointConversionError,
                         FixedPointRangeError, fixed_add, fixed_mul,
                         fixed_sub, max_abs_error, solve_fixed, sweep_fixed,
                         to_fixed, to_real_field)
from .dataflow import (LineBufferModel, StreamConfig, TapAlignmentError,
                       buffer_sizes, estimate_cycles, reuse_window,
                       stream_sweep)
from .safety import (Environment, FilterDecision, Obstacle, OutOfDomainError,
                     SafetyRuntime, build_initial_values, filter_loop,
                     interpolate_value, safe_control, should_intervene,
                     simulate_step, value_gradient)
from .valuefile import ValueFileError, read_valuefile, write_valuefile
from .config import ConfigError, RunConfig, load_config

__version__ = "0.1.0"
