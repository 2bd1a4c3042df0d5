"""Perturbation-resampling inference for the predictiveness curve.

Each replicate redoes the whole estimation pipeline under independent
unit-exponential subject weights: working-model fit, risk scores,
censoring estimate, binomial objective, knots, and quantiles all carry
the weights. The CV splits are drawn once and reused by every replicate,
so weights are the only thing a replicate changes; replicate e uses the
rng stream derived from (seed, e) and results are identical under any
worker count. Standard errors are the sample SD over replicates, and
Wald intervals are built on the logit scale.
"""

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from .curve import (
    INVERSE_GRID,
    CurveEstimate,
    InverseCurve,
    cv_curve_over_splits,
    draw_splits,
    inverse_curve_grid,
)
from .data import Dataset, StudyConfig, rng_from_seed
from .errors import PredcurveError, TooFewReplicates
from .mathutil import expit, logit, norm_ppf

# stream tags for derived rngs
STREAM_SPLITS = 1
STREAM_PERTURB = 2
STREAM_SIM_DATA = 3
STREAM_SIM_EST = 4
STREAM_TRUTH = 5

_INV_CLAMP = 1.0 / (2.0 * INVERSE_GRID.size)


@dataclass(eq=False)
class PerturbReplicate:
    e_index: int
    r_hat_e: np.ndarray
    rinv_e: np.ndarray | None = None


@dataclass(eq=False)
class InferenceResult:
    se: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    level: float
    e_used: int


def draw_exp_weights(n: int, rng) -> np.ndarray:
    """n independent unit-exponential perturbation weights."""
    if n < 1:
        raise ValueError("need n >= 1")
    return rng.standard_exponential(n)


def perturbed_replicate(dataset: Dataset, splits, omega, cfg: StudyConfig,
                        e_index: int = 0, fixed_beta=None) -> PerturbReplicate:
    """Full pipeline under perturbation weights omega, over the same
    splits as the point estimate. Any stage failure propagates, marking
    the replicate invalid."""
    omega = np.asarray(omega, dtype=float)
    r_hat, _, _ = cv_curve_over_splits(dataset, splits, omega, cfg,
                                       discard_failures=False, fixed_beta=fixed_beta)
    tmp = CurveEstimate(cfg.v_grid, r_hat, cfg.tau, cfg.parameterization)
    rinv = inverse_curve_grid(tmp).proportion
    return PerturbReplicate(e_index, r_hat, rinv)


def _logit_wald(point, se, level):
    z = norm_ppf(0.5 + level / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        se_logit = np.where(se > 0, se / (point * (1.0 - point)), 0.0)
    lo = expit(logit(point) - z * se_logit)
    hi = expit(logit(point) + z * se_logit)
    return lo, hi


def variance_ci(point: CurveEstimate, replicates, level: float = 0.95) -> InferenceResult:
    """SE per grid point as the sample SD of the replicate curves;
    level-CI by the delta method on the logit scale."""
    if len(replicates) < 2:
        raise TooFewReplicates(f"need at least 2 valid replicates, got {len(replicates)}")
    arr = np.vstack([rep.r_hat_e for rep in replicates])
    se = arr.std(axis=0, ddof=1)
    lo, hi = _logit_wald(point.r_hat, se, level)
    return InferenceResult(se, lo, hi, level, len(replicates))


def _inverse_inference(point_prop, replicates, level):
    reps = [rep.rinv_e for rep in replicates if rep.rinv_e is not None]
    if len(reps) < 2:
        raise TooFewReplicates("need at least 2 valid replicates for inverse-curve inference")
    arr = np.vstack(reps)
    se = arr.std(axis=0, ddof=1)
    clamped = np.clip(point_prop, _INV_CLAMP, 1.0 - _INV_CLAMP)
    lo, hi = _logit_wald(clamped, se, level)
    return se, lo, hi


@dataclass(eq=False)
class CurveInference:
    curve: CurveEstimate
    inverse: InverseCurve
    e_used: int
    e_failed: int


def _replicate_task(args):
    dataset, splits, cfg, e, fixed_beta = args
    rng = rng_from_seed(cfg.seed, STREAM_PERTURB, e)
    omega = draw_exp_weights(dataset.n, rng)
    try:
        rep = perturbed_replicate(dataset, splits, omega, cfg, e_index=e, fixed_beta=fixed_beta)
        return e, rep.r_hat_e, rep.rinv_e
    except PredcurveError:
        return e, None, None


def curve_with_ci(dataset: Dataset, cfg: StudyConfig, level: float = 0.95,
                  workers: int = 1, fixed_beta=None) -> CurveInference:
    """Point estimate plus perturbation inference, all reproducible from
    cfg.seed. Aborts when more than 10% of replicates fail."""
    splits = draw_splits(dataset, cfg, rng_from_seed(cfg.seed, STREAM_SPLITS))
    r_hat, used, failed = cv_curve_over_splits(dataset, splits, None, cfg,
                                               discard_failures=True, fixed_beta=fixed_beta)
    point = CurveEstimate(cfg.v_grid, r_hat, cfg.tau, cfg.parameterization,
                          reps_used=used, reps_failed=failed)

    tasks = [(dataset, splits, cfg, e, fixed_beta) for e in range(1, cfg.perturb_e + 1)]
    if workers > 1:
        chunk = max(1, len(tasks) // (8 * workers))
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_replicate_task, tasks, chunksize=chunk))
    else:
        raw = [_replicate_task(t) for t in tasks]
    raw.sort(key=lambda t: t[0])
    replicates = [PerturbReplicate(e, r, ri) for e, r, ri in raw if r is not None]
    e_failed = cfg.perturb_e - len(replicates)
    if e_failed > 0.10 * cfg.perturb_e:
        raise TooFewReplicates(
            f"{e_failed} of {cfg.perturb_e} perturbation replicates failed (>10%)")

    inf = variance_ci(point, replicates, level)
    point.se, point.ci_lo, point.ci_hi = inf.se, inf.ci_lo, inf.ci_hi

    inverse = inverse_curve_grid(point)
    inverse.se, inverse.ci_lo, inverse.ci_hi = _inverse_inference(
        inverse.proportion, replicates, level)
    return CurveInference(point, inverse, inf.e_used, e_failed)
