import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predcurve import default_knots, glm_basis, rcs_basis, rcs_design, rng_from_seed
from predcurve.errors import DegenerateScores
from predcurve.splines import KnotSet


def test_default_knots_uniform_grid_q3():
    scores = np.round(np.arange(101) * 0.01, 10)
    ks = default_knots(scores, 3)
    assert np.allclose(ks.knots, [0.10, 0.50, 0.90], atol=1e-9)


def test_default_knots_uniform_grid_q4():
    scores = np.round(np.arange(101) * 0.01, 10)
    ks = default_knots(scores, 4)
    assert np.allclose(ks.knots, [0.05, 0.35, 0.65, 0.95], atol=1e-9)


def test_default_knots_constant_scores():
    with pytest.raises(DegenerateScores):
        default_knots(np.ones(50), 3)


def test_default_knots_duplicate_invariance():
    rng = rng_from_seed(5)
    scores = rng.normal(size=200)
    dup = np.concatenate([scores, scores, scores])
    for q in (3, 4, 5):
        a = default_knots(scores, q)
        b = default_knots(dup, q)
        assert np.allclose(a.knots, b.knots)


def test_rcs_below_first_knot_is_linear_only():
    ks = KnotSet(np.array([0.0, 1.0, 2.0, 3.0]))
    row = rcs_basis(-1.5, ks)
    assert row[0] == 1.0 and row[1] == -1.5
    assert np.all(row[2:] == 0.0)


def test_rcs_hand_value():
    # knots (0,1,2), x=1.5:
    # s1 = [1.5^3 - 0.5^3 * (2-0)/(2-1) + 0] / (2-0)^2 = (3.375 - 0.25)/4
    ks = KnotSet(np.array([0.0, 1.0, 2.0]))
    row = rcs_basis(1.5, ks)
    assert row.shape == (3,)
    assert row[0] == 1.0 and row[1] == pytest.approx(1.5)
    assert row[2] == pytest.approx(0.78125)


def test_rcs_linear_tail_above_last_knot():
    ks = KnotSet(np.array([-1.0, 0.0, 0.5, 2.0]))
    h = 0.37
    for x in (5.0, 9.3):
        rows = rcs_design(np.array([x, x + h, x + 2 * h]), ks)
        second_diff = rows[2] - 2 * rows[1] + rows[0]
        assert np.all(np.abs(second_diff) < 1e-9)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_rcs_smooth_through_knots(seed):
    # value, first and second derivative continuous at every knot
    rng = rng_from_seed(seed)
    knots = np.sort(rng.normal(size=4) * 2)
    if np.min(np.diff(knots)) < 0.1:
        return
    ks = KnotSet(knots)
    eps = 1e-6
    for t in knots:
        xs = np.array([t - 2 * eps, t - eps, t, t + eps, t + 2 * eps])
        rows = rcs_design(xs, ks)
        for j in range(2, rows.shape[1]):
            vals = rows[:, j]
            assert abs(vals[3] - vals[1]) < 1e-4            # continuity
            d_lo = (vals[2] - vals[0]) / (2 * eps)
            d_hi = (vals[4] - vals[2]) / (2 * eps)
            assert abs(d_hi - d_lo) < 1e-3                  # first derivative
            s_lo = (vals[2] - 2 * vals[1] + vals[0]) / eps ** 2
            s_hi = (vals[4] - 2 * vals[3] + vals[2]) / eps ** 2
            assert abs(s_hi - s_lo) < 0.05                  # second derivative


def test_glm_basis():
    assert np.array_equal(glm_basis(0.0), [1.0, 0.0])
    assert np.array_equal(glm_basis(-2.5), [1.0, -2.5])
    assert glm_basis(3.14).shape == (2,)
