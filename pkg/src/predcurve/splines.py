"""Restricted cubic spline basis for the flexible risk model, plus the
linear-only (glm) degenerate basis.

With knots t_1 < ... < t_Q the basis row for x is (1, x, s_1(x), ...,
s_{Q-2}(x)) where

    s_j(x) = [ (x - t_j)_+^3
               - (x - t_{Q-1})_+^3 * (t_Q - t_j) / (t_Q - t_{Q-1})
               + (x - t_Q)_+^3 * (t_{Q-1} - t_j) / (t_Q - t_{Q-1}) ]
             / (t_Q - t_1)^2

The tail corrections make every s_j linear outside [t_1, t_Q]; the
(t_Q - t_1)^2 normalization keeps columns on a comparable scale for the
Newton solver.
"""

from dataclasses import dataclass

import numpy as np

from .data import KNOT_QUANTILES
from .errors import DegenerateScores


@dataclass(frozen=True, eq=False)
class KnotSet:
    knots: np.ndarray

    @property
    def q(self) -> int:
        return self.knots.shape[0]


def default_knots(scores, q: int, weights=None) -> KnotSet:
    """Knots at the standard outer-trimmed quantiles of the score sample
    (0.10/0.50/0.90 for q=3, 0.05/0.35/0.65/0.95 for q=4,
    0.05/0.275/0.50/0.725/0.95 for q=5).

    Optional weights reweight the empirical quantiles, which propagates
    perturbation weights into knot placement.
    """
    from .curve import weighted_quantile

    scores = np.asarray(scores, dtype=float)
    if q not in KNOT_QUANTILES:
        raise DegenerateScores(f"knot count must be 3, 4, or 5, got {q}")
    if np.unique(scores).size < q:
        raise DegenerateScores(f"need at least {q} distinct scores for {q} knots")
    if weights is None:
        weights = np.ones_like(scores)
    knots = np.array([weighted_quantile(scores, weights, v) for v in KNOT_QUANTILES[q]])
    if np.any(np.diff(knots) <= 0):
        raise DegenerateScores("score sample too concentrated: coincident knots")
    return KnotSet(knots)


def rcs_basis(x: float, knots: KnotSet) -> np.ndarray:
    """Basis row (1, x, s_1(x), ..., s_{Q-2}(x)) at a single point."""
    return rcs_design(np.array([x], dtype=float), knots)[0]


def rcs_design(xs, knots: KnotSet) -> np.ndarray:
    """Design matrix of basis rows for a vector of points."""
    xs = np.asarray(xs, dtype=float)
    t = knots.knots
    q = t.shape[0]
    norm = (t[q - 1] - t[0]) ** 2
    ratio_hi = (t[q - 1] - t[q - 2])
    out = np.empty((xs.shape[0], q))
    out[:, 0] = 1.0
    out[:, 1] = xs
    cube_last = np.maximum(xs[:, None] - t[None, [q - 2, q - 1]], 0.0) ** 3
    for j in range(q - 2):
        s = (np.maximum(xs - t[j], 0.0) ** 3
             - cube_last[:, 0] * (t[q - 1] - t[j]) / ratio_hi
             + cube_last[:, 1] * (t[q - 2] - t[j]) / ratio_hi)
        out[:, 2 + j] = s / norm
    return out


def glm_basis(x: float) -> np.ndarray:
    """Linear-only basis row (1, x)."""
    return np.array([1.0, float(x)])


def glm_design(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    return np.column_stack([np.ones_like(xs), xs])
