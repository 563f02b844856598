"""Backward-martingale transport under pseudo-Euclidean costs.

The package solves and certifies grid-restricted coupling problems whose
objective is a pseudo-Euclidean scalar product and whose first margin is
pinned by a barycenter constraint, computes the Gaussian insider-trading
equilibrium through a non-symmetric algebraic Riccati equation, and
implements the uniform approximation of couplings by maps.
"""

__version__ = "0.1.0"

from .approx import (
    MapFromPlan,
    Rearrangement,
    SampleSet,
    map_from_plan,
    uniform_approximation,
    verify_rearrangement,
    z_values,
)
from .discrete_mot import (
    DiscreteMeasure,
    PlanMatrix,
    certify_optimality,
    conditional_map_from_plan,
    default_grid,
    dual_value,
    partition_oracle,
    solve_plan_lp,
    subset_barycenter_grid,
)
from .equilibrium import (
    GaussianEquilibrium,
    SimulationReport,
    draw_samples,
    efficiency_regression,
    equilibrium_samples,
    primal_dual_values,
    profit_check,
    simulate,
    solve_gaussian,
)
from .errors import NumericalFailure
from .riccati import (
    CovarianceBlocks,
    RiccatiSolution,
    check_symmetric_case,
    lambda_symmetric,
    nare_residual,
    solve_nare,
    spd_sqrt,
    sylvester_solve,
)
from .sspace import (
    LinearMonotoneGraph,
    PiecewiseMonotoneGraph,
    ScalarProductMatrix,
    fitzpatrick_linear,
    fitzpatrick_pwl,
    is_s_monotone,
    project_linear,
    project_pwl,
    pwl_value,
    s_product,
    standard_matrix,
)

__all__ = [
    "__version__",
    "NumericalFailure",
    "ScalarProductMatrix",
    "LinearMonotoneGraph",
    "PiecewiseMonotoneGraph",
    "standard_matrix",
    "s_product",
    "is_s_monotone",
    "fitzpatrick_linear",
    "project_linear",
    "fitzpatrick_pwl",
    "project_pwl",
    "pwl_value",
    "CovarianceBlocks",
    "RiccatiSolution",
    "spd_sqrt",
    "lambda_symmetric",
    "nare_residual",
    "sylvester_solve",
    "solve_nare",
    "check_symmetric_case",
    "GaussianEquilibrium",
    "SimulationReport",
    "solve_gaussian",
    "primal_dual_values",
    "draw_samples",
    "simulate",
    "equilibrium_samples",
    "profit_check",
    "efficiency_regression",
    "DiscreteMeasure",
    "PlanMatrix",
    "default_grid",
    "subset_barycenter_grid",
    "solve_plan_lp",
    "partition_oracle",
    "dual_value",
    "certify_optimality",
    "conditional_map_from_plan",
    "SampleSet",
    "Rearrangement",
    "MapFromPlan",
    "uniform_approximation",
    "z_values",
    "verify_rearrangement",
    "map_from_plan",
]
