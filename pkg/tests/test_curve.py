import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predcurve import (
    CurveEstimate,
    StudyConfig,
    cv_estimate,
    estimate_half,
    fg_fit,
    inverse_curve,
    inverse_curve_grid,
    rng_from_seed,
    two_fold_split,
    weighted_quantile,
)
from predcurve.curve import INVERSE_GRID, cv_curve_over_splits, draw_splits
from predcurve.errors import EmptyInput, PredcurveError
from predcurve.simgen import gen_setting1, true_curve_setting1


def test_weighted_quantile_median():
    assert weighted_quantile([1.0, 2.0, 3.0], [1, 1, 1], 0.5) == 2.0


def test_weighted_quantile_weighted_ecdf():
    # weighted CDF at 1 is 3/4 >= 0.7, so the 0.7-quantile is 1
    assert weighted_quantile([1.0, 2.0], [3.0, 1.0], 0.7) == 1.0


def test_weighted_quantile_upper_tail():
    rng = rng_from_seed(1)
    vals = rng.normal(size=50)
    assert weighted_quantile(vals, np.ones(50), 0.999) == vals.max()


def test_weighted_quantile_empty():
    with pytest.raises(EmptyInput):
        weighted_quantile([], [], 0.5)
    with pytest.raises(EmptyInput):
        weighted_quantile([1.0], [0.0], 0.5)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 0.99))
@settings(max_examples=60, deadline=None)
def test_weighted_quantile_is_smallest_cdf_crossing(seed, v):
    rng = rng_from_seed(seed)
    n = int(rng.integers(1, 30))
    vals = np.round(rng.normal(size=n), 2)
    w = np.round(rng.exponential(1.0, n), 2) + 0.01
    q = weighted_quantile(vals, w, v)
    total = w.sum()
    cdf_at = lambda x: w[vals <= x].sum() / total
    assert cdf_at(q) >= v - 1e-9
    smaller = vals[vals < q]
    if smaller.size:
        assert cdf_at(smaller.max()) < v + 1e-9


def _cfg(**kw):
    kw.setdefault("tau", 4.0)
    return StudyConfig(**kw)


def test_estimate_half_deterministic():
    ds = gen_setting1(600, rng_from_seed(2))
    cfg = _cfg()
    split = two_fold_split(ds, rng_from_seed(3))
    a = estimate_half(split.idx_a, split.idx_b, ds, None, cfg)
    b = estimate_half(split.idx_a, split.idx_b, ds, None, cfg)
    assert np.array_equal(a.r_hat, b.r_hat)
    assert np.all((a.r_hat > 0) & (a.r_hat < 1))


@pytest.mark.parametrize("param", ["rcs", "glm"])
def test_estimate_half_invariant_to_score_rescaling(param):
    # quantile transform absorbs a positive rescaling of beta
    ds = gen_setting1(600, rng_from_seed(4))
    cfg = _cfg(parameterization=param)
    split = two_fold_split(ds, rng_from_seed(5))
    beta = fg_fit(ds.subset(split.idx_a)).beta
    base = estimate_half(split.idx_a, split.idx_b, ds, None, cfg, fixed_beta=beta)
    scaled = estimate_half(split.idx_a, split.idx_b, ds, None, cfg, fixed_beta=2.5 * beta)
    assert np.max(np.abs(base.r_hat - scaled.r_hat)) < 1e-6


def test_estimate_half_large_n_near_truth():
    ds = gen_setting1(100000, rng_from_seed(9))
    cfg = _cfg()
    split = two_fold_split(ds, rng_from_seed(1))
    est = estimate_half(split.idx_a, split.idx_b, ds, None, cfg)
    i = int(np.argmin(np.abs(est.v_grid - 0.5)))
    assert est.r_hat[i] == pytest.approx(0.353, abs=0.01)


def test_cv_one_repeat_is_half_swap_average():
    ds = gen_setting1(400, rng_from_seed(6))
    cfg = _cfg(cv_repeats=1)
    splits = draw_splits(ds, cfg, rng_from_seed(7))
    r1 = estimate_half(splits[0].idx_a, splits[0].idx_b, ds, None, cfg).r_hat
    r2 = estimate_half(splits[0].idx_b, splits[0].idx_a, ds, None, cfg).r_hat
    got, used, failed = cv_curve_over_splits(ds, splits, None, cfg)
    assert used == 1 and failed == 0
    assert np.allclose(got, 0.5 * (r1 + r2), atol=0)


def test_cv_estimate_deterministic_given_seed():
    ds = gen_setting1(400, rng_from_seed(8))
    cfg = _cfg()
    a = cv_estimate(ds, cfg, rng_from_seed(99))
    b = cv_estimate(ds, cfg, rng_from_seed(99))
    assert np.array_equal(a.r_hat, b.r_hat)
    assert a.reps_used == cfg.cv_repeats


def test_cv_estimate_all_reps_fail_raises():
    # tau far beyond follow-up: every repetition fails with the same cause
    ds = gen_setting1(200, rng_from_seed(10))
    cfg = _cfg(tau=50.0)
    with pytest.raises(PredcurveError):
        cv_estimate(ds, cfg, rng_from_seed(11))


def test_cv_more_repeats_stabilize():
    # SD of the final curve across seeds shrinks when repeats grow 5 -> 20
    ds = gen_setting1(400, rng_from_seed(12))
    at = int(np.argmin(np.abs(_cfg().v_grid - 0.5)))
    vals5, vals20 = [], []
    for seed in range(50):
        vals5.append(cv_estimate(ds, _cfg(cv_repeats=5), rng_from_seed(100, seed)).r_hat[at])
        vals20.append(cv_estimate(ds, _cfg(cv_repeats=20), rng_from_seed(200, seed)).r_hat[at])
    assert np.std(vals20) < np.std(vals5)


def _flat_curve(level):
    grid = _cfg().v_grid
    return CurveEstimate(grid, np.full(grid.size, level), 4.0, "rcs")


def test_inverse_curve_flat():
    assert inverse_curve(_flat_curve(0.3), 0.5) == 1.0
    assert inverse_curve(_flat_curve(0.3), 0.1) == 0.0


def test_inverse_curve_monotone_crossing():
    # strictly increasing curve crossing p = 0.3 exactly at v = 0.4
    grid = _cfg().v_grid
    r = 0.3 + 0.5 * (grid - 0.4)
    curve = CurveEstimate(grid, np.clip(r, 0.01, 0.99), 4.0, "rcs")
    got = inverse_curve(curve, 0.3)
    assert abs(got - 0.40) <= 0.011


def test_inverse_curve_nondecreasing_in_p():
    ds = gen_setting1(500, rng_from_seed(13))
    est = cv_estimate(ds, _cfg(), rng_from_seed(14))
    inv = inverse_curve_grid(est)
    assert np.all(np.diff(inv.proportion) >= 0)
    assert inv.p_grid.shape == INVERSE_GRID.shape


def test_inverse_then_curve_roundtrip_monotone():
    # for a monotone curve, inverse(r(v*)) lands within 0.02 of v*
    grid = _cfg().v_grid
    r = np.asarray(true_curve_setting1(grid, 4.0))
    curve = CurveEstimate(grid, r, 4.0, "rcs")
    for v_star in (0.2, 0.5, 0.8):
        i = int(np.argmin(np.abs(grid - v_star)))
        got = inverse_curve(curve, float(r[i]))
        assert abs(got - v_star) <= 0.02
