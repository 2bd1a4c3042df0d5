"""Weighted Fine-Gray working-model fit.

The coefficient vector maximizes the IPCW-weighted subdistribution log
partial likelihood. Cause-1 event times are the jump times; subject j is
in the risk set at time t when Y_j >= t, and a subject with an observed
competing event additionally stays at risk for all t > Y_j with the
time-dependent factor G_A(t) / G_A(Y_j), where G_A is the censoring
Kaplan-Meier refit on the same training half (and the same perturbation
weights). Ties use the Breslow convention, and every subject contribution
carries its perturbation weight.

The objective, score, and information are normalized by the total cause-1
event weight; the maximizer is unchanged and the gradient tolerance keeps
one meaning at every sample size. All sums are computed by prefix/suffix
cumulation over time-sorted subjects, so an evaluation costs O(n d^2).
"""

from dataclasses import dataclass

import numpy as np

from .censoring import fit_censoring_km
from .data import Dataset
from .errors import NoCause1Events, SingularInformation


@dataclass(frozen=True)
class FGFit:
    beta: np.ndarray
    iterations: int
    final_gradient_norm: float
    loglik: float
    converged: bool


class _FGProblem:
    """Time-sorted arrays and beta-independent aggregates for one fit."""

    def __init__(self, train: Dataset, pert_weights=None):
        n = train.n
        if pert_weights is None:
            pw = np.ones(n)
        else:
            pw = np.asarray(pert_weights, dtype=float)
        order = np.argsort(train.y, kind="stable")
        self.y = train.y[order]
        event = train.event[order]
        self.z = train.z[order]
        self.pw = pw[order]
        self.d = train.d

        ev1 = event == 1
        if not np.any(ev1) or self.pw[ev1].sum() <= 0:
            raise NoCause1Events("training half has no weighted cause-1 events")

        ghat = fit_censoring_km(train, pert_weights)
        comp = (event >= 2) & (self.pw > 0)
        g_at_y = ghat.left(self.y)
        self.comp_c = np.where(comp, self.pw / np.where(comp, g_at_y, 1.0), 0.0)

        te, inv = np.unique(self.y[ev1], return_inverse=True)
        self.left_idx = np.searchsorted(self.y, te, side="left")
        self.g_te = ghat.left(te)
        k = te.shape[0]
        self.a_k = np.zeros(k)
        np.add.at(self.a_k, inv, self.pw[ev1])
        self.za_k = np.zeros((k, self.d))
        np.add.at(self.za_k, inv, self.pw[ev1, None] * self.z[ev1])
        self.w_total = self.a_k.sum()
        self.za_total = self.za_k.sum(axis=0)

        ia, ib = np.triu_indices(self.d)
        self.pair_ia, self.pair_ib = ia, ib
        self.zz = self.z[:, ia] * self.z[:, ib]

    def evaluate(self, beta, want_hessian=True):
        """Normalized loglik, score, and (optionally) negative Hessian."""
        d, m = self.d, self.pair_ia.shape[0]
        eta = self.z @ beta
        shift = float(np.max(eta))
        r = np.exp(eta - shift)

        cls_v = self.pw * r
        comp_v = self.comp_c * r
        cols = [cls_v[:, None], comp_v[:, None],
                cls_v[:, None] * self.z, comp_v[:, None] * self.z]
        if want_hessian:
            cols += [cls_v[:, None] * self.zz, comp_v[:, None] * self.zz]
        stacked = np.concatenate(cols, axis=1)
        csum = np.vstack([np.zeros((1, stacked.shape[1])), np.cumsum(stacked, axis=0)])
        total = csum[-1]
        pre = csum[self.left_idx]

        g = self.g_te
        s0 = (total[0] - pre[:, 0]) + g * pre[:, 1]
        s1 = ((total[2:2 + d] - pre[:, 2:2 + d])
              + g[:, None] * pre[:, 2 + d:2 + 2 * d])

        loglik = (self.za_total @ beta
                  - np.sum(self.a_k * (shift + np.log(s0)))) / self.w_total
        zbar = s1 / s0[:, None]
        score = (self.za_total - self.a_k @ zbar) / self.w_total
        if not want_hessian:
            return loglik, score, None

        off = 2 + 2 * d
        s2 = ((total[off:off + m] - pre[:, off:off + m])
              + g[:, None] * pre[:, off + m:off + 2 * m])
        s2n = s2 / s0[:, None]
        pair_mean = s2n - zbar[:, self.pair_ia] * zbar[:, self.pair_ib]
        flat = self.a_k @ pair_mean
        neg_h = np.zeros((d, d))
        neg_h[self.pair_ia, self.pair_ib] = flat
        neg_h[self.pair_ib, self.pair_ia] = flat
        return loglik, score, neg_h / self.w_total


def fg_fit(train: Dataset, pert_weights=None,
           tol: float = 1e-8, max_iter: int = 50) -> FGFit:
    """Newton iteration from beta = 0 with step-halving; converged when
    the normalized score max-norm drops to tol. Non-convergence returns
    the best iterate with converged=False."""
    prob = _FGProblem(train, pert_weights)
    beta = np.zeros(prob.d)
    loglik, score, neg_h = prob.evaluate(beta)
    it = 0
    grad_norm = float(np.max(np.abs(score)))
    while it < max_iter and grad_norm > tol:
        it += 1
        try:
            step = np.linalg.solve(neg_h, score)
        except np.linalg.LinAlgError as exc:
            raise SingularInformation(f"information matrix is singular: {exc}") from None
        # slack of a few ulps lets Newton cross rounding plateaus near the
        # optimum, where true improvements are below float resolution
        slack = 8.0 * np.finfo(float).eps * (1.0 + abs(loglik))
        scale = 1.0
        accepted = False
        for _ in range(30):
            cand = beta + scale * step
            cand_ll, cand_score, cand_h = prob.evaluate(cand)
            if np.isfinite(cand_ll) and cand_ll >= loglik - slack:
                beta, loglik, score, neg_h = cand, cand_ll, cand_score, cand_h
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
        grad_norm = float(np.max(np.abs(score)))
    return FGFit(beta, it, grad_norm, loglik, grad_norm <= tol)


def fg_loglik(beta, train: Dataset, pert_weights=None) -> float:
    """Normalized weighted subdistribution log partial likelihood."""
    ll, _, _ = _FGProblem(train, pert_weights).evaluate(np.asarray(beta, float), want_hessian=False)
    return ll


def fg_score(beta, train: Dataset, pert_weights=None) -> np.ndarray:
    """Gradient of fg_loglik at beta."""
    _, score, _ = _FGProblem(train, pert_weights).evaluate(np.asarray(beta, float), want_hessian=False)
    return score
