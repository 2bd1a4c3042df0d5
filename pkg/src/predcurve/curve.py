"""Cross-validated predictiveness curve assembly and its inverse reading.

One half-sample pass: fit the working competing-risks model on the
training half, score the test half, reweight the test half for censoring
at the horizon, regress the event-by-tau indicator on the basis-expanded
score, and read the fitted risk at the weighted score quantile for every
grid point. Halves are swapped and averaged per split, then averaged over
repeated splits.
"""

from dataclasses import dataclass, field

import numpy as np

from .censoring import fit_censoring_km, ipcw_rows
from .data import GLM, Dataset, Split, StudyConfig, two_fold_split
from .errors import EmptyInput, HalfEstimateFailed, NotConverged, PredcurveError
from .finegray import fg_fit
from .mathutil import expit
from .splines import default_knots, glm_design, rcs_design
from .wbinomial import fit_weighted_binomial

# fixed evaluation grid for the inverse functional: step-0.01 over (0,1)
INVERSE_GRID = np.arange(1, 100) * 0.01
_CLIP = 1e-12


@dataclass(eq=False)
class CurveEstimate:
    v_grid: np.ndarray
    r_hat: np.ndarray
    tau: float
    parameterization: str
    se: np.ndarray | None = None
    ci_lo: np.ndarray | None = None
    ci_hi: np.ndarray | None = None
    reps_used: int = 0
    reps_failed: int = 0


@dataclass(eq=False)
class InverseCurve:
    p_grid: np.ndarray
    proportion: np.ndarray
    se: np.ndarray | None = None
    ci_lo: np.ndarray | None = None
    ci_hi: np.ndarray | None = None


def weighted_quantile(values, weights, v: float) -> float:
    """Smallest x among values with weighted-CDF(x) >= v; the
    left-continuous empirical quantile under unit weights."""
    return float(weighted_quantiles(values, weights, np.array([v]))[0])


def weighted_quantiles(values, weights, vs) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if values.size == 0:
        raise EmptyInput("no values to take quantiles of")
    total = weights.sum()
    if not total > 0:
        raise EmptyInput("weights sum to zero")
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    # tiny relative nudge keeps exact-boundary cases (weighted CDF equal to
    # v) inclusive under float rounding, independent of the weight scale
    idx = np.searchsorted(cw, (vs - 1e-9) * total, side="left")
    return values[order][np.minimum(idx, values.size - 1)]


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PredcurveError as exc:
        raise HalfEstimateFailed(name, exc) from exc


def estimate_half(train_idx, test_idx, dataset: Dataset, pert_weights,
                  cfg: StudyConfig, fixed_beta=None) -> CurveEstimate:
    """One half-sample curve estimate.

    pert_weights is the full length-n weight vector (all ones for the
    point estimate); each half uses its own slice everywhere, so a
    perturbation run reweights every stage. fixed_beta bypasses the
    working-model fit and scores the test half with the given coefficients
    (set [1] on a one-column dataset for a raw single-biomarker curve).
    """
    train_idx = np.asarray(train_idx, dtype=np.intp)
    test_idx = np.asarray(test_idx, dtype=np.intp)
    pw = np.ones(dataset.n) if pert_weights is None else np.asarray(pert_weights, dtype=float)

    if fixed_beta is None:
        fit = _stage("finegray", fg_fit, dataset.subset(train_idx), pw[train_idx])
        if not fit.converged:
            raise HalfEstimateFailed("finegray", NotConverged(
                f"gradient norm {fit.final_gradient_norm:.3e} after {fit.iterations} iterations"))
        beta = fit.beta
    else:
        beta = np.asarray(fixed_beta, dtype=float)

    test = dataset.subset(test_idx)
    w_test = pw[test_idx]
    xi = test.z @ beta

    ghat = _stage("censoring", fit_censoring_km, test, w_test)
    rows = _stage("ipcw", ipcw_rows, test, ghat, cfg.tau)

    if cfg.parameterization == GLM:
        design = glm_design(xi)
        make_rows = glm_design
    else:
        knots = _stage("knots", default_knots, xi, cfg.knots_q, weights=w_test)
        design = rcs_design(xi, knots)
        make_rows = lambda q: rcs_design(q, knots)

    theta_fit = _stage("weighted_binomial", _fit_checked,
                       rows.delta_tau, design, w_test * rows.weight)

    q_v = weighted_quantiles(xi, w_test, cfg.v_grid)
    r_hat = expit(make_rows(q_v) @ theta_fit.theta)
    r_hat = np.clip(r_hat, _CLIP, 1.0 - _CLIP)
    return CurveEstimate(cfg.v_grid, r_hat, cfg.tau, cfg.parameterization)


def _fit_checked(delta, design, weights):
    fit = fit_weighted_binomial(delta, design, weights)
    if not fit.converged:
        raise NotConverged(
            f"gradient norm {fit.final_gradient_norm:.3e} after {fit.iterations} iterations")
    return fit


def cv_curve_over_splits(dataset: Dataset, splits, pert_weights, cfg: StudyConfig,
                         discard_failures: bool = True, fixed_beta=None):
    """Average of half-swapped estimates over the given splits.

    Returns (r_hat grid, repetitions used, repetitions failed). With
    discard_failures a failed repetition is dropped (all failing raises);
    otherwise the first failure propagates.
    """
    acc = np.zeros(cfg.v_grid.shape[0])
    used = 0
    failed = 0
    last_exc = None
    for split in splits:
        try:
            a = estimate_half(split.idx_a, split.idx_b, dataset, pert_weights, cfg, fixed_beta)
            b = estimate_half(split.idx_b, split.idx_a, dataset, pert_weights, cfg, fixed_beta)
        except PredcurveError as exc:
            if not discard_failures:
                raise
            failed += 1
            last_exc = exc
            continue
        acc += 0.5 * (a.r_hat + b.r_hat)
        used += 1
    if used == 0:
        raise last_exc if last_exc is not None else EmptyInput("no splits supplied")
    return acc / used, used, failed


def draw_splits(dataset: Dataset, cfg: StudyConfig, rng) -> list[Split]:
    return [two_fold_split(dataset, rng) for _ in range(cfg.cv_repeats)]


def cv_estimate(dataset: Dataset, cfg: StudyConfig, rng) -> CurveEstimate:
    """Cross-validated point estimate: average the half-swapped curves
    over cfg.cv_repeats fresh random splits."""
    splits = draw_splits(dataset, cfg, rng)
    r_hat, used, failed = cv_curve_over_splits(dataset, splits, None, cfg)
    return CurveEstimate(cfg.v_grid, r_hat, cfg.tau, cfg.parameterization,
                         reps_used=used, reps_failed=failed)


def _extend_to_grid(curve: CurveEstimate, grid) -> np.ndarray:
    """Nearest-grid-point reading of the curve, clamping outside its
    domain to the boundary values."""
    pos = np.searchsorted(curve.v_grid, grid)
    pos = np.clip(pos, 1, curve.v_grid.size - 1)
    lo, hi = curve.v_grid[pos - 1], curve.v_grid[pos]
    nearest = np.where(np.abs(grid - lo) <= np.abs(hi - grid), pos - 1, pos)
    return curve.r_hat[nearest]


def inverse_curve(curve: CurveEstimate, p: float) -> float:
    """Proportion of the population whose fitted horizon risk lies below
    p: the measure of the sublevel set {v : r(v) < p} on the step-0.01
    grid over (0,1), valid for non-monotone curves."""
    r_ext = _extend_to_grid(curve, INVERSE_GRID)
    return float(np.count_nonzero(r_ext < p)) / INVERSE_GRID.size


def inverse_curve_grid(curve: CurveEstimate, p_grid=None) -> InverseCurve:
    p_grid = INVERSE_GRID if p_grid is None else np.asarray(p_grid, dtype=float)
    r_ext = _extend_to_grid(curve, INVERSE_GRID)
    prop = np.count_nonzero(r_ext[None, :] < p_grid[:, None], axis=1) / INVERSE_GRID.size
    return InverseCurve(p_grid, prop.astype(float))
