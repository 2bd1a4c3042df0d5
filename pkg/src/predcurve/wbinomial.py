"""Weighted binomial likelihood for the event-by-tau indicator given the
basis-expanded risk score, maximized by Newton iteration with step-halving.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResponses, DimensionMismatch
from .mathutil import expit


@dataclass(frozen=True)
class ThetaFit:
    theta: np.ndarray
    converged: bool
    iterations: int
    final_gradient_norm: float


def _objective(theta, B, delta, w):
    eta = B @ theta
    # w * [delta*log(p) + (1-delta)*log(1-p)] in a saturation-proof form:
    # delta*eta - log(1+exp(eta)) with log1p(exp(-|eta|)) + max(eta, 0)
    return float(np.sum(w * (delta * eta - (np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))))))


def fit_weighted_binomial(delta_tau, basis_rows, weights,
                          tol: float = 1e-8, max_iter: int = 50) -> ThetaFit:
    """Maximize sum_i w_i [d_i log p_i + (1-d_i) log(1-p_i)] with
    p_i = expit(theta' B_i), Newton from theta = 0.

    Rows with weight 0 are dropped. Needs positive weight on both response
    classes (DegenerateResponses otherwise). Separation shows up as
    converged=False after max_iter with drifting theta; no penalization is
    applied.
    """
    B = np.asarray(basis_rows, dtype=float)
    delta = np.asarray(delta_tau, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (B.shape[0] == delta.shape[0] == w.shape[0]):
        raise DimensionMismatch("delta_tau, basis_rows, weights must have equal length")
    keep = w > 0
    B, delta, w = B[keep], delta[keep], w[keep]
    if B.shape[0] == 0 or not (np.any(delta > 0) and np.any(delta < 1)):
        raise DegenerateResponses("need positive weight on both response classes")

    p_dim = B.shape[1]
    theta = np.zeros(p_dim)
    obj = _objective(theta, B, delta, w)
    grad_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(B @ theta)
        grad = B.T @ (w * (delta - p))
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= tol:
            return ThetaFit(theta, True, it - 1, grad_norm)
        h = w * p * (1.0 - p)
        info = B.T @ (B * h[:, None])
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            break
        # step-halving with a few ulps of slack, so rounding plateaus near
        # the optimum do not block the final Newton contractions
        slack = 8.0 * np.finfo(float).eps * (1.0 + abs(obj))
        scale = 1.0
        for _ in range(30):
            cand = theta + scale * step
            cand_obj = _objective(cand, B, delta, w)
            if np.isfinite(cand_obj) and cand_obj >= obj - slack:
                theta, obj = cand, cand_obj
                break
            scale *= 0.5
        else:
            break
    p = expit(B @ theta)
    grad_norm = float(np.max(np.abs(B.T @ (w * (delta - p)))))
    return ThetaFit(theta, grad_norm <= tol, it, grad_norm)


def predict_prob(theta, basis_row) -> float:
    """expit(theta' B), overflow-safe and strictly inside (0, 1)."""
    theta = np.asarray(theta, dtype=float)
    row = np.asarray(basis_row, dtype=float)
    if theta.shape[0] != row.shape[-1]:
        raise DimensionMismatch(f"theta length {theta.shape[0]} != basis length {row.shape[-1]}")
    p = expit(row @ theta)
    return float(np.clip(p, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)))
