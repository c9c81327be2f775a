"""Lie-Trotter-Suzuki decompositions of ordered operator exponentials."""
from .bounds import (
    DecompositionPlan,
    XConstants,
    choose_order,
    exponential_budget,
    make_plan,
    qk_bounds,
    segment_count,
    single_step_bound,
    x_constants,
)
from .evaluator import (
    NormalizationSpec,
    apply_schedule,
    kappa_from_catalog,
    normalized_apply,
    segmented_apply,
    symmetry_defect,
)
from .harness import ConvergenceReport, appendix_b_demo, bound_sweep, fit_slope, order_study
from .matrix_core import mat_exp, spectral_norm
from .operators import (
    OperatorTerm,
    SmoothnessError,
    SmoothnessEstimate,
    TermSet,
    build_system,
    estimate_lambda,
    evaluate_term,
    sum_derivative_norms,
)
from .oracle import (
    OracleResult,
    ordered_exp,
    piecewise_constant_exact,
    taylor_terms,
    truncation_bound_check,
)
from .schedule import ExpFactor, Schedule, base_schedule, lts_schedule, q_max, recurse, s_coefficient

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport",
    "DecompositionPlan",
    "ExpFactor",
    "NormalizationSpec",
    "OperatorTerm",
    "OracleResult",
    "Schedule",
    "SmoothnessError",
    "SmoothnessEstimate",
    "TermSet",
    "XConstants",
    "appendix_b_demo",
    "apply_schedule",
    "base_schedule",
    "bound_sweep",
    "build_system",
    "choose_order",
    "estimate_lambda",
    "evaluate_term",
    "exponential_budget",
    "fit_slope",
    "kappa_from_catalog",
    "lts_schedule",
    "make_plan",
    "mat_exp",
    "normalized_apply",
    "order_study",
    "ordered_exp",
    "piecewise_constant_exact",
    "q_max",
    "qk_bounds",
    "recurse",
    "s_coefficient",
    "segment_count",
    "segmented_apply",
    "single_step_bound",
    "spectral_norm",
    "sum_derivative_norms",
    "symmetry_defect",
    "taylor_terms",
    "truncation_bound_check",
    "x_constants",
]
