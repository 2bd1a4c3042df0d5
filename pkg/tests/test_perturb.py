import numpy as np
import pytest
import scipy.stats

from predcurve import (
    CurveEstimate,
    PerturbReplicate,
    StudyConfig,
    curve_with_ci,
    draw_exp_weights,
    perturbed_replicate,
    rng_from_seed,
    variance_ci,
)
from predcurve.curve import cv_curve_over_splits, draw_splits
from predcurve.errors import TooFewReplicates
from predcurve.mathutil import norm_ppf
from predcurve.perturb import STREAM_SPLITS
from predcurve.simgen import gen_setting1


def test_exp_weights_moments():
    w = draw_exp_weights(10 ** 6, rng_from_seed(0))
    assert abs(w.mean() - 1.0) < 0.005
    assert abs(w.var() - 1.0) < 0.01
    assert np.all(w > 0)


def test_exp_weights_deterministic():
    a = draw_exp_weights(100, rng_from_seed(5))
    b = draw_exp_weights(100, rng_from_seed(5))
    assert np.array_equal(a, b)


def _setup(n=400, seed=21, **kw):
    kw.setdefault("tau", 4.0)
    kw.setdefault("cv_repeats", 3)
    cfg = StudyConfig(**kw)
    ds = gen_setting1(n, rng_from_seed(seed))
    splits = draw_splits(ds, cfg, rng_from_seed(cfg.seed, STREAM_SPLITS))
    return ds, cfg, splits


def test_unit_weights_reproduce_point_estimate_bitwise():
    ds, cfg, splits = _setup()
    point, _, _ = cv_curve_over_splits(ds, splits, None, cfg)
    rep = perturbed_replicate(ds, splits, np.ones(ds.n), cfg)
    assert np.array_equal(rep.r_hat_e, point)


def test_distinct_weights_give_distinct_curves():
    ds, cfg, splits = _setup()
    r1 = perturbed_replicate(ds, splits, draw_exp_weights(ds.n, rng_from_seed(1)), cfg)
    r2 = perturbed_replicate(ds, splits, draw_exp_weights(ds.n, rng_from_seed(2)), cfg)
    assert not np.array_equal(r1.r_hat_e, r2.r_hat_e)


def test_variance_ci_closed_form():
    # R = 0.5, se = 0.05: se_logit = 0.2, CI = expit(0 -+ 1.96 * 0.2)
    grid = np.array([0.5])
    point = CurveEstimate(grid, np.array([0.5]), 4.0, "rcs")
    reps = [PerturbReplicate(e, np.array([v])) for e, v in
            enumerate([0.45, 0.55, 0.45, 0.55])]
    # sample SD of {.45,.55,.45,.55} is not 0.05 exactly; rescale to hit it
    arr = np.array([0.45, 0.55, 0.45, 0.55])
    sd = arr.std(ddof=1)
    reps = [PerturbReplicate(e, np.array([0.5 + (v - 0.5) * 0.05 / sd])) for e, v in enumerate(arr)]
    inf = variance_ci(point, reps, level=0.95)
    assert inf.se[0] == pytest.approx(0.05, abs=1e-12)
    assert inf.ci_lo[0] == pytest.approx(0.4033, abs=2e-4)
    assert inf.ci_hi[0] == pytest.approx(0.5967, abs=2e-4)
    assert inf.e_used == 4


def test_variance_ci_identical_replicates_collapse():
    grid = np.array([0.3])
    point = CurveEstimate(grid, np.array([0.3]), 4.0, "rcs")
    reps = [PerturbReplicate(e, np.array([0.3])) for e in range(5)]
    inf = variance_ci(point, reps)
    assert inf.se[0] == 0.0
    assert inf.ci_lo[0] == pytest.approx(0.3) and inf.ci_hi[0] == pytest.approx(0.3)


def test_variance_ci_needs_two_replicates():
    point = CurveEstimate(np.array([0.5]), np.array([0.4]), 4.0, "rcs")
    with pytest.raises(TooFewReplicates):
        variance_ci(point, [PerturbReplicate(0, np.array([0.4]))])


def test_ci_endpoints_inside_unit_interval():
    ds, _, _ = _setup(seed=33)
    cfg = StudyConfig(tau=4.0, cv_repeats=2, perturb_e=40, seed=77)
    res = curve_with_ci(ds, cfg)
    assert np.all(res.curve.ci_lo > 0) and np.all(res.curve.ci_hi < 1)
    assert np.all(res.curve.ci_lo <= res.curve.r_hat + 1e-12)
    assert np.all(res.curve.r_hat <= res.curve.ci_hi + 1e-12)
    assert np.all(res.inverse.ci_lo > 0) and np.all(res.inverse.ci_hi < 1)
    assert res.e_used + res.e_failed == cfg.perturb_e


def test_curve_with_ci_deterministic_and_worker_invariant():
    ds = gen_setting1(300, rng_from_seed(44))
    cfg = StudyConfig(tau=4.0, cv_repeats=2, perturb_e=24, seed=13)
    a = curve_with_ci(ds, cfg, workers=1)
    b = curve_with_ci(ds, cfg, workers=2)
    assert np.array_equal(a.curve.r_hat, b.curve.r_hat)
    assert np.array_equal(a.curve.se, b.curve.se)
    assert np.array_equal(a.inverse.proportion, b.inverse.proportion)
    assert np.array_equal(a.inverse.se, b.inverse.se)


def test_norm_ppf_against_scipy():
    for p in (1e-9, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999, 1 - 1e-9):
        assert norm_ppf(p) == pytest.approx(scipy.stats.norm.ppf(p), abs=1e-9)
    assert norm_ppf(0.975) == pytest.approx(1.959963985, abs=1e-8)
