"""Censoring distribution and IPCW weights.

The censoring survivor G(t) = P(C >= t) is estimated by a (case-weighted)
Kaplan-Meier estimator that treats censorings as the events of interest
and failures as censored-for-C. Ties follow the usual convention that
failures happen just before censorings at the same time, so a subject
failing at a censoring time stays in the C-risk set and keeps a positive
weight denominator.
"""

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import AllWeightsZero, ZeroGhatAtDeterminable


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous piecewise-constant function with left limits.

    `values[i]` is the value on [jump_times[i], jump_times[i+1]); `at`
    evaluates right-continuously (P(C > t) for a survival curve), `left`
    evaluates the left limit (P(C >= t)).
    """

    jump_times: np.ndarray
    values: np.ndarray
    value_at_zero: float = 1.0

    def at(self, t):
        idx = np.searchsorted(self.jump_times, t, side="right")
        return self._lookup(idx, np.ndim(t) == 0)

    def left(self, t):
        idx = np.searchsorted(self.jump_times, t, side="left")
        return self._lookup(idx, np.ndim(t) == 0)

    def _lookup(self, idx, scalar):
        ext = np.concatenate(([self.value_at_zero], self.values))
        out = ext[idx]
        return float(out) if scalar else out


def fit_censoring_km(dataset: Dataset, case_weights=None) -> StepFunction:
    """Weighted product-limit estimator of the censoring survivor function.

    Event code 0 counts as the event (a censoring); all failures are
    treated as censored-for-C and leave the risk set after censorings at
    the same time are resolved. With unit weights this is the plain
    Kaplan-Meier estimator of C.
    """
    n = dataset.n
    if case_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(case_weights, dtype=float)
        if w.shape != (n,):
            raise AllWeightsZero(f"case_weights must have length {n}")
        if np.any(w < 0):
            raise AllWeightsZero("case weights must be nonnegative")
        if not np.any(w > 0):
            raise AllWeightsZero("all case weights are zero")

    order = np.argsort(dataset.y, kind="stable")
    y = dataset.y[order]
    cens = (dataset.event[order] == 0).astype(float)
    ws = w[order]

    uniq, start = np.unique(y, return_index=True)
    # weighted censorings at each distinct time
    d = np.add.reduceat(ws * cens, start)
    # weighted count at risk: everyone with Y >= t
    total = ws.sum()
    before = np.concatenate(([0.0], np.cumsum(ws)))[start]
    at_risk = total - before

    keep = d > 0
    if not np.any(keep):
        return StepFunction(np.empty(0), np.empty(0), 1.0)
    times = uniq[keep]
    factors = 1.0 - d[keep] / at_risk[keep]
    values = np.cumprod(factors)
    # guard against tiny negative rounding
    values = np.clip(values, 0.0, 1.0)
    return StepFunction(times, values, 1.0)


def determinable(y: float, event: int, tau: float) -> int:
    """1 iff the cause-1-by-tau status is known from the observed data:
    an observed failure by tau, or follow-up reaching tau."""
    if y < 0:
        raise ValueError(f"negative time {y}")
    return int((y <= tau and event >= 1) or y >= tau)


@dataclass(frozen=True, eq=False)
class IpcwRows:
    """Per-subject determinability, IPCW weight, and cause-1-by-tau
    indicator; indexable as a sequence of rows."""

    determinable: np.ndarray
    weight: np.ndarray
    delta_tau: np.ndarray

    def __len__(self):
        return self.determinable.shape[0]

    def __getitem__(self, i):
        return (int(self.determinable[i]), float(self.weight[i]), int(self.delta_tau[i]))


def ipcw_rows(dataset: Dataset, ghat: StepFunction, tau: float) -> IpcwRows:
    """IPCW rows at horizon tau: weight = determinable / G(Y ^ tau) with
    G evaluated as P(C >= t), delta_tau = I(Y <= tau, event = 1).

    Raises ZeroGhatAtDeterminable when the estimated censoring survivor
    vanishes where a determinable subject needs reweighting, which signals
    that tau lies beyond the censoring support.
    """
    y, event = dataset.y, dataset.event
    det = ((y <= tau) & (event >= 1)) | (y >= tau)
    delta = (y <= tau) & (event == 1)
    g = ghat.left(np.minimum(y, tau))
    if ghat.left(tau) <= 0.0 or np.any(det & (g <= 0.0)):
        raise ZeroGhatAtDeterminable(
            f"censoring survivor estimate is 0 at or before tau={tau}; lower tau")
    weight = np.where(det, 1.0 / np.where(g > 0, g, 1.0), 0.0)
    return IpcwRows(det.astype(np.int8), weight, delta.astype(np.int8))
