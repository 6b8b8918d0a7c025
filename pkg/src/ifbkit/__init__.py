"""Inertial forward-backward methods with configurable momentum schedules.

Solves ``min f(x) + g(x)`` with ``f`` smooth convex and ``g`` prox-friendly
by ``x_k = T_lam(y_k)``, ``y_{k+1} = x_k + gamma_k (x_k - x_{k-1})`` where
``gamma_k = (t_k - 1) / t_{k+1}``. The package provides the momentum
schedules, the solver engines and their traces, post-hoc rate analysis,
and dataset/trace I/O.
"""

from ._exceptions import (ConfigError, InsufficientDataError, LibSVMParseError,
                          NumericFailure)
from .analysis import (RateFit, estimate_fstar, fit_rate, probe_error_bound, prox_gap_ratios,
                       trim_to_resolution)
from .problems import (ProblemInstance, estimate_lipschitz, gen_lasso_instance,
                       gen_logistic_instance, gen_qp_instance, make_box_qp, make_lasso,
                       make_logistic)
from .prox import (BoxIndicator, L1Norm, ZeroFunction, forward_backward_map,
                   min_norm_subgradient, project_box, soft_threshold)
from .schedules import (ComparisonSeq, ConstantBeta, Exp, FistaCD, FistaClassic, LogPoly,
                        NoInertia, Power, check_assumption_a2, check_nesterov_rule,
                        comparison_alpha, gamma, parse_schedule, t_value)
from .solver import (SolverOptions, Trace, lyapunov_series, monitor_descent, run_fb,
                     run_fista_restart, run_ifb, run_ifb_adapm, solve)

__all__ = [
    "BoxIndicator",
    "ComparisonSeq",
    "ConfigError",
    "ConstantBeta",
    "Exp",
    "FistaCD",
    "FistaClassic",
    "InsufficientDataError",
    "L1Norm",
    "LibSVMParseError",
    "LogPoly",
    "NoInertia",
    "NumericFailure",
    "Power",
    "ProblemInstance",
    "RateFit",
    "SolverOptions",
    "Trace",
    "ZeroFunction",
    "check_assumption_a2",
    "check_nesterov_rule",
    "comparison_alpha",
    "estimate_fstar",
    "estimate_lipschitz",
    "fit_rate",
    "forward_backward_map",
    "gamma",
    "gen_lasso_instance",
    "gen_logistic_instance",
    "gen_qp_instance",
    "lyapunov_series",
    "make_box_qp",
    "make_lasso",
    "make_logistic",
    "min_norm_subgradient",
    "monitor_descent",
    "parse_schedule",
    "probe_error_bound",
    "project_box",
    "prox_gap_ratios",
    "run_fb",
    "run_fista_restart",
    "run_ifb",
    "run_ifb_adapm",
    "soft_threshold",
    "solve",
    "t_value",
    "trim_to_resolution",
]

__version__ = "0.1.0"
