"""Data model, validation, risk scores, and two-fold splitting.

A Dataset stores observations columnwise (numpy arrays) and is immutable
after construction; all stochastic choices flow through explicitly passed
numpy Generators so that every run is reproducible from its seed.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadConfig,
    BadEventCode,
    DimensionMismatch,
    EmptyInput,
    NegativeTime,
    NoCause1Events,
    NonFinite,
    RaggedCovariates,
    TooFewRecords,
)

GLM = "glm"
RCS = "rcs"

# quantile positions used for default spline knots, per knot count
KNOT_QUANTILES = {
    3: (0.10, 0.50, 0.90),
    4: (0.05, 0.35, 0.65, 0.95),
    5: (0.05, 0.275, 0.50, 0.725, 0.95),
}


def rng_from_seed(seed: int, *key: int) -> np.random.Generator:
    """Derive an independent, order-insensitive stream from (seed, *key)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in key]]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class SubjectRecord:
    """One observation: observed time, event code (0 censored, 1 cause of
    interest, >=2 competing causes), covariate vector."""

    y: float
    event: int
    z: np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    y: np.ndarray       # (n,) observed times
    event: np.ndarray   # (n,) integer codes in {0..k}
    z: np.ndarray       # (n, d) covariates
    k: int              # number of competing causes

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.z.shape[1]

    def record(self, i: int) -> SubjectRecord:
        return SubjectRecord(float(self.y[i]), int(self.event[i]), self.z[i].copy())

    def records(self):
        return [self.record(i) for i in range(self.n)]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.y[idx], self.event[idx], self.z[idx], self.k)


def validate_dataset(raw_records, k: int | None = None,
                     require_cause1: bool = True) -> Dataset:
    """Build a validated Dataset from (y, event, z) triples or an existing
    Dataset (idempotent).

    k is inferred as the largest event code seen unless declared. With
    require_cause1 the dataset must contain at least one cause-1 event,
    which every fitting routine needs.
    """
    if isinstance(raw_records, Dataset):
        y, event = raw_records.y, raw_records.event
        z = raw_records.z
        declared_k = k if k is not None else raw_records.k
    else:
        rows = list(raw_records)
        if not rows:
            raise EmptyInput("no records supplied")
        y = np.array([r[0] for r in rows], dtype=float)
        event = np.array([r[1] for r in rows])
        zs = [np.atleast_1d(np.asarray(r[2], dtype=float)) for r in rows]
        dims = {v.shape[0] for v in zs}
        if len(dims) > 1:
            raise RaggedCovariates(f"mixed covariate dimensions {sorted(dims)}")
        z = np.vstack(zs)
        declared_k = k

    if y.size == 0:
        raise EmptyInput("no records supplied")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(z)):
        raise NonFinite("non-finite time or covariate value")
    if np.any(y < 0):
        raise NegativeTime(f"negative observed time {y[y < 0][0]}")
    if not np.all(event == np.floor(event)):
        raise BadEventCode("event codes must be integers")
    event = event.astype(np.int64)
    if np.any(event < 0):
        raise BadEventCode(f"negative event code {event[event < 0][0]}")
    k_eff = int(declared_k) if declared_k is not None else max(int(event.max()), 1)
    if np.any(event > k_eff):
        raise BadEventCode(f"event code {int(event[event > k_eff][0])} exceeds K={k_eff}")
    if require_cause1 and not np.any(event == 1):
        raise NoCause1Events("dataset has no cause-1 events")
    return Dataset(y.copy(), event, np.array(z, dtype=float), k_eff)


def linear_risk_score(z, beta) -> float:
    """Inner product risk score; with d=1 and beta=[1] this is the raw
    single-biomarker score."""
    z = np.asarray(z, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if z.shape[-1] != beta.shape[0]:
        raise DimensionMismatch(f"covariate length {z.shape[-1]} != beta length {beta.shape[0]}")
    return z @ beta


@dataclass(frozen=True, eq=False)
class Split:
    """Disjoint index sets covering {0..n-1}; |idx_a| - |idx_b| is 0 or 1."""

    idx_a: np.ndarray
    idx_b: np.ndarray


def two_fold_split(dataset: Dataset, rng: np.random.Generator) -> Split:
    """Uniformly random half partition; odd n puts the extra record in A."""
    n = dataset.n
    if n < 4:
        raise TooFewRecords(f"need at least 4 records to split, got {n}")
    perm = rng.permutation(n)
    n_a = math.ceil(n / 2)
    return Split(np.sort(perm[:n_a]), np.sort(perm[n_a:]))


@dataclass(frozen=True)
class StudyConfig:
    """Estimation settings: horizon tau, knot count, grid, CV repeats,
    perturbation count, seed, and curve parameterization."""

    tau: float
    knots_q: int = 3
    grid_lo: float = 0.05
    grid_hi: float = 0.95
    grid_step: float = 0.01
    cv_repeats: int = 5
    perturb_e: int = 400
    seed: int = 20240
    parameterization: str = RCS
    link: str = "logit"
    v_grid: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise BadConfig(f"tau must be positive and finite, got {self.tau}")
        if self.knots_q not in (3, 4, 5):
            raise BadConfig(f"knots_q must be 3, 4, or 5, got {self.knots_q}")
        if not (0.0 < self.grid_lo < self.grid_hi < 1.0):
            raise BadConfig("grid bounds must satisfy 0 < lo < hi < 1")
        if self.grid_step <= 0:
            raise BadConfig("grid_step must be positive")
        if self.grid_lo < self.grid_step - 1e-12 or self.grid_hi > 1.0 - self.grid_step + 1e-12:
            raise BadConfig("grid must exclude the boundary: lo >= step and hi <= 1 - step")
        if self.cv_repeats < 1:
            raise BadConfig("cv_repeats must be >= 1")
        if self.perturb_e < 1:
            raise BadConfig("perturb_e must be >= 1")
        param = self.parameterization.lower()
        if param not in (GLM, RCS):
            raise BadConfig(f"parameterization must be '{GLM}' or '{RCS}', got {self.parameterization}")
        object.__setattr__(self, "parameterization", param)
        if self.link != "logit":
            raise BadConfig(f"only the logit link is implemented, got {self.link}")
        steps = int(math.floor((self.grid_hi - self.grid_lo) / self.grid_step + 1e-9))
        grid = self.grid_lo + self.grid_step * np.arange(steps + 1)
        if grid.size < self.knots_q + 2:
            raise BadConfig(f"grid has {grid.size} points, needs at least knots_q + 2 = {self.knots_q + 2}")
        grid.setflags(write=False)
        object.__setattr__(self, "v_grid", grid)


def load_dataset_csv(path) -> tuple[Dataset, list[str]]:
    """Read a dataset from CSV with header `time,status,<covariates...>`."""
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "time" or header[1] != "status":
            raise BadConfig(f"{path}: header must start with 'time,status' followed by covariate columns")
        covariates = header[2:]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise RaggedCovariates(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                y = float(row[0])
                ev = int(float(row[1]))
                z = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise NonFinite(f"{path}:{lineno}: {exc}") from None
            rows.append((y, ev, z))
    return validate_dataset(rows), covariates
