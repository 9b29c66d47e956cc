"""Identification of velocity, dispersion coefficient and fractional order
for a space fractional advection-dispersion equation from final-time
concentration and flux measurements."""

from .fracpoly import (
    Polynomial,
    FracExpansion,
    gamma,
    digamma,
    rgamma,
    rl_derivative,
    rl_alpha_sensitivity,
)
from .modfun import ModulatingFamily, GridEval, build_family, evaluate_on_grid
from .synthdata import (
    TrueModel,
    MeasurementSet,
    exact_solution,
    source_term,
    synthesize,
    add_noise,
    restrict,
)
from .estimator import (
    LinearSystem,
    EstimatorConfig,
    EstimateResult,
    RankDeficientError,
    GradientDegenerateError,
    trapezoid,
    assemble_theorem1,
    solve_2col_least_squares,
    assemble_prop1,
    solve_derivative_system,
    residual_K_U,
    gradient_Kprime,
    estimate_two_param,
    newton_estimate,
)

__version__ = "0.1.0"
