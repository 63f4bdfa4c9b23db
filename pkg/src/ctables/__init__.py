"""Contingency tables with fixed margins: exact counts, the independence
heuristic, typical tables and the Barvinok-margin phase transition."""
from ._accel import backend, set_backend
from .asymptotics import (
    constants_DE, correlation_exponent, correlation_exponent_derivatives, critical_b,
    ih_expansion_prediction, main_theorem_prediction, phase_point, second_order_coefficient,
    typical_entropy_prediction, verify_expansion,
)
from .errors import *  # noqa: F401,F403
from .exact_count import count_tables, log_count
from .heuristic import correlation_ratio, independence_heuristic
from .margins import BarvinokParams, MarginPair, barvinok_margins, validate
from .typical import (
    barvinok_bounds, g_objective, independence_table, solve_block_typical, solve_typical,
)

__version__ = "0.1.0"
