"""Predictiveness curves for competing-risks prediction models.

Estimates the curve of horizon risk against risk-score quantile for a
working Fine-Gray model, with two-fold repeated cross-validation,
IPCW-weighted flexible binomial regression on a restricted cubic spline
basis, perturbation-resampling standard errors, and a simulation harness.
"""

__version__ = "0.1.0"

from .censoring import IpcwRows, StepFunction, determinable, fit_censoring_km, ipcw_rows
from .curve import (
    INVERSE_GRID,
    CurveEstimate,
    InverseCurve,
    cv_estimate,
    estimate_half,
    inverse_curve,
    inverse_curve_grid,
    weighted_quantile,
)
from .data import (
    Dataset,
    Split,
    StudyConfig,
    SubjectRecord,
    linear_risk_score,
    load_dataset_csv,
    rng_from_seed,
    two_fold_split,
    validate_dataset,
)
from .finegray import FGFit, fg_fit, fg_loglik, fg_score
from .perturb import (
    CurveInference,
    InferenceResult,
    PerturbReplicate,
    curve_with_ci,
    draw_exp_weights,
    perturbed_replicate,
    variance_ci,
)
from .simgen import (
    StudyReport,
    TrueCurve,
    calibrate_setting2_c1,
    gen_setting1,
    gen_setting2,
    run_sim_study,
    true_curve_setting1,
    true_curve_setting2,
)
from .splines import KnotSet, default_knots, glm_basis, rcs_basis, rcs_design
from .wbinomial import ThetaFit, fit_weighted_binomial, predict_prob

__all__ = [name for name in dir() if not name.startswith("_")]
