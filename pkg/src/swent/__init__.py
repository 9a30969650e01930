"""Topological entropy bounds and estimates for switched nonlinear systems."""

__version__ = "0.1.0"

from .bounds import (BoundReport, all_bounds, bound_block_diagonal, bound_general,
                     bound_interconnected, distance_bound_check, prefix_max_weighted_avg)
from .config import RunConfig, load_config, parse_config
from .dynamics import (CompactBox, SmoothMap, Structure, SwitchedSystem, Trajectory, integrate,
                       linear_system, lv_limit_box, lv_system, lv_uub_check,
                       variational_integrate)
from .errors import (DimensionError, DivergenceError, HorizonError, RefusalError,
                     ResolutionError, SwentError, ValidationError)
from .estimate import (entropy_estimate, grid_theta, separated_number, spanning_number,
                       volume_growth_check)
from .measures import MeasureSpec, Norm, lower_measure, matrix_measure, measure
from .switching import (SwitchingSignal, asymptotic_rates, make_constant, make_explicit,
                        make_periodic, make_setpoint)

__all__ = [
    "BoundReport", "all_bounds", "bound_block_diagonal", "bound_general", "bound_interconnected",
    "distance_bound_check", "prefix_max_weighted_avg",
    "RunConfig", "load_config", "parse_config",
    "CompactBox", "SmoothMap", "Structure", "SwitchedSystem", "Trajectory", "integrate",
    "linear_system", "lv_limit_box", "lv_system", "lv_uub_check", "variational_integrate",
    "DimensionError", "DivergenceError", "HorizonError", "RefusalError", "ResolutionError",
    "SwentError", "ValidationError",
    "entropy_estimate", "grid_theta", "separated_number", "spanning_number", "volume_growth_check",
    "MeasureSpec", "Norm", "lower_measure", "matrix_measure", "measure",
    "SwitchingSignal", "asymptotic_rates", "make_constant", "make_explicit", "make_periodic",
    "make_setpoint",
]
