"""Penalized maximum-likelihood estimation for GLMs with folded-concave penalties."""

from .families import FamilySpec, LinearPredictorState, cumulant, deviance, log_likelihood, mean, predictor_state, sample_response, variance_fn
from .penalties import (
    PenaltySpec,
    ProxProblem,
    local_concavity,
    local_concavity_per_coord,
    max_concavity,
    penalty_deriv,
    penalty_value,
    prox_univariate,
)
from .solver import Dataset, PathResult, SolverConfig, SolverNumericalError, coord_quadratic, default_grid, ica_path, lambda_max_proxy, restricted_newton_mle
from .diagnostics import BoundedResponses, GlobalCheckReport, OptimalityReport, ScaleRefusalError, UnboundedResponses, check_global, check_kkt_l1, check_local_max, delta_identifiability_margin, deviation_bound
from .tuning import SelectionResult, bic_score, kfold_cv, select_lambda, sic_score
from .simulate import ExperimentResult, SimConfig, SimMetrics, evaluate_fit, gen_design, prediction_error, robust_sd, run_experiment

__version__ = "0.1.0"
