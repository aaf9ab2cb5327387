"""Repairable spare parts under age replacement with a capacitated repair shop.

Exact single-good steady state and policy optimisation, a fixed-point
decomposition for several goods sharing the shop (FCFS or preemptive
priority), and a discrete-event simulator used to check all of it.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    IllConditionedError,
    NumericalError,
    QuadratureError,
    SparesError,
    UnsupportedLifetimeError,
    UnsupportedSizeError,
    ValidationError,
)
from .lifetime import InstallationTime, LifetimeSpec, from_mean_cv, installation_rate, truncated_laplace
from .multi import GoodSpec, MultiGoodConfig, evaluate_multi, marie_fixed_point, optimize_multi
from .optimize import exhaustive_search, optimize_policy, optimize_S, optimize_S_K
from .priority import PriorityClassSpec, j_class_steady_state, priority_network_solve, two_class_steady_state
from .sim import SimConfig, compare, simulate
from .single import CostRates, SingleGoodConfig, SteadyState, cost_rate, p0_closed_form, steady_state

__all__ = [
    "ConvergenceError", "CostRates", "GoodSpec", "IllConditionedError", "InstallationTime", "LifetimeSpec",
    "MultiGoodConfig", "NumericalError", "PriorityClassSpec", "QuadratureError", "SimConfig",
    "SingleGoodConfig", "SparesError", "SteadyState", "UnsupportedLifetimeError", "UnsupportedSizeError",
    "ValidationError", "compare", "cost_rate", "evaluate_multi", "exhaustive_search", "from_mean_cv",
    "installation_rate", "j_class_steady_state", "marie_fixed_point", "optimize_S", "optimize_S_K",
    "optimize_multi", "optimize_policy", "p0_closed_form", "priority_network_solve", "simulate",
    "steady_state", "truncated_laplace", "two_class_steady_state",
]
