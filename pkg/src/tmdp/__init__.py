"""Offline contextual MDP toolkit.

Pairwise-contrast (penalized comparison) selection of a transition density
over histogram and spline candidate classes, plug-in cost optimization over
a control grid, offline policy evaluation via Bellman fixed points, and
distribution-shift diagnostics, together with a seeded simulation harness
and a CLI that emits CSV/JSON reports and matplotlib figures.
"""

from tmdp.measures import (
    EmptyConditional,
    EmpiricalMeasure,
    Quadrature,
    Trajectory,
    conditional_measure_weights,
    integrate_lambda_n,
    integrate_point_marginal,
)
from tmdp.losses import (
    CandidateDensity,
    hellinger_sq,
    l2_sqrt_distance_sq,
    psi,
    t_functional,
)
from tmdp.models import (
    ClassConfig,
    DyadicPartition,
    HistogramDensity,
    SplineDensity,
    enumerate_candidates,
    fit_histogram,
    fit_spline,
)
from tmdp.selector import SelectionResult, SelectorConfig, contrast, select
from tmdp.simulate import (
    MinimaxInstance,
    NoiseSpec,
    SimModel,
    simulate,
    simulate_shifted,
    true_density,
)
from tmdp.costs import CostSpec, empirical_cost, regret, select_control
from tmdp.ope import (
    PolicySpec,
    ValueSolution,
    hellinger_shift_gap,
    ope_error_bound_check,
    shift_risk_report,
    solve_value,
    transition_operator,
)

__all__ = [
    "CostSpec",
    "MinimaxInstance",
    "NoiseSpec",
    "PolicySpec",
    "SimModel",
    "ValueSolution",
    "empirical_cost",
    "hellinger_shift_gap",
    "ope_error_bound_check",
    "regret",
    "select_control",
    "shift_risk_report",
    "simulate",
    "simulate_shifted",
    "solve_value",
    "transition_operator",
    "true_density",
    "CandidateDensity",
    "ClassConfig",
    "DyadicPartition",
    "EmptyConditional",
    "EmpiricalMeasure",
    "HistogramDensity",
    "Quadrature",
    "SelectionResult",
    "SelectorConfig",
    "SplineDensity",
    "Trajectory",
    "conditional_measure_weights",
    "contrast",
    "enumerate_candidates",
    "fit_histogram",
    "fit_spline",
    "hellinger_sq",
    "integrate_lambda_n",
    "integrate_point_marginal",
    "l2_sqrt_distance_sq",
    "psi",
    "select",
    "t_functional",
]

__version__ = "0.1.0"
