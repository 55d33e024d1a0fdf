"""Datasets, CSV input/output, synthetic generators and specialised views.

A :class:`Dataset` is an immutable design matrix / response pair together with
the index of the audited coefficient.  The two views,
:class:`BinaryTreatmentView` and :class:`DiDView`, are the projections the
exact auditors work on; both are orientation-normalised so the audited effect is
nonnegative on the full data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import EmptyGroup, MissingColumn, NotBinaryTreatment, ParseError
from .linalg import as_matrix, as_vector, ols_fit

#: Relative tolerance (w.r.t. the full-data coefficient) below which a refit
#: coefficient counts as having reached zero.
FLIP_RTOL = 1e-9
#: Absolute floor, in units of ``max|y| / max|x_target|``, so that a coefficient
#: that is zero up to rounding also counts.
FLIP_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``X`` (n x d), response ``y`` and audited coefficient index."""

    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]
    target: int
    has_intercept: bool = False
    response_name: str = "y"

    def __post_init__(self):
        X = as_matrix(self.X, "X").copy()
        y = as_vector(self.y, "y", X.shape[0]).copy()
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        names = tuple(self.column_names)
        if len(names) != X.shape[1]:
            raise ValueError(f"{len(names)} column names for {X.shape[1]} columns")
        object.__setattr__(self, "column_names", names)
        if not 0 <= self.target < X.shape[1]:
            raise ValueError(f"target index {self.target} out of range for d={X.shape[1]}")
        if self.has_intercept and X.shape[0] and not any(np.all(X[:, j] == 1.0) for j in range(X.shape[1])):
            raise ValueError("has_intercept requires an all-ones column")

    @classmethod
    def from_arrays(cls, X, y, target: int = 0, column_names: Sequence[str] | None = None,
                    intercept: bool = False) -> "Dataset":
        """Build a dataset, optionally appending a constant column last."""
        X = as_matrix(X, "X")
        names = list(column_names) if column_names is not None else [f"x{j}" for j in range(X.shape[1])]
        if intercept:
            if X.shape[0] and any(np.all(X[:, j] == 1.0) for j in range(X.shape[1])):
                raise ValueError("data already contains an all-ones column; do not append another")
            X = np.column_stack([X, np.ones(X.shape[0])])
            names.append("intercept")
        return cls(X, y, tuple(names), target, has_intercept=intercept)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def target_name(self) -> str:
        return self.column_names[self.target]

    @cached_property
    def beta_full(self) -> np.ndarray:
        return ols_fit(self.X, self.y)

    @property
    def orientation(self) -> int:
        """+1 if the full-data target coefficient is nonnegative, -1 otherwise."""
        return -1 if self.beta_full[self.target] < 0 else 1

    @property
    def flip_tolerance(self) -> float:
        col = float(np.abs(self.X[:, self.target]).max())
        scale = float(np.abs(self.y).max()) / col if col > 0 else 0.0
        return FLIP_RTOL * abs(float(self.beta_full[self.target])) + FLIP_ATOL * scale

    def keep_mask(self, removed) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[np.asarray(list(removed), dtype=int)] = False
        return mask

    def subset(self, keep) -> "Dataset":
        keep = np.asarray(keep)
        return Dataset(self.X[keep], self.y[keep], self.column_names, self.target,
                       self.has_intercept, self.response_name)

    def oriented(self) -> "Dataset":
        """Copy whose responses are negated when needed so the target coefficient is >= 0."""
        if self.orientation > 0:
            return self
        return Dataset(self.X, -self.y, self.column_names, self.target, self.has_intercept,
                       self.response_name)


@dataclass(frozen=True)
class SubsetMask:
    """Sorted, duplicate-free row indices scheduled for removal."""

    removed: tuple[int, ...]

    def __post_init__(self):
        r = tuple(sorted(int(i) for i in self.removed))
        if len(set(r)) != len(r):
            raise ValueError("duplicate indices in removal set")
        if r and r[0] < 0:
            raise ValueError("negative index in removal set")
        object.__setattr__(self, "removed", r)

    def __len__(self) -> int:
        return len(self.removed)

    def keep(self, n: int) -> np.ndarray:
        if self.removed and self.removed[-1] >= n:
            raise ValueError("removal index out of range")
        mask = np.ones(n, dtype=bool)
        mask[list(self.removed)] = False
        return mask


# ---------------------------------------------------------------------------
# CSV


def _parse_cell(text: str, row: int, column: str) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise ParseError(row, column, text) from None
    if not math.isfinite(value):
        raise ParseError(row, column, text)
    return value


def _read_columns(path, wanted: Sequence[str] | None = None):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(1, "", "<empty file>") from None
        names = list(wanted) if wanted is not None else header
        for name in names:
            if name not in header:
                raise MissingColumn(name)
        pos = [header.index(name) for name in names]
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) < len(header):
                raise ParseError(lineno, header[len(record)], "<missing>")
            rows.append([_parse_cell(record[p], lineno, name) for p, name in zip(pos, names)])
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return header, names, data


def load_csv(path, target_column: str, response_column: str, intercept: bool = False,
             feature_columns: Sequence[str] | None = None) -> Dataset:
    """Read a regression dataset from a headed, comma-separated file.

    Every column other than the response becomes a regressor unless
    ``feature_columns`` narrows the selection.  The target index is resolved by
    name before the optional intercept column is appended (last).
    """
    header, _, _ = _read_columns(path, [])
    if response_column not in header:
        raise MissingColumn(response_column)
    if feature_columns is None:
        feature_columns = [h for h in header if h != response_column]
    feature_columns = list(feature_columns)
    if target_column not in feature_columns:
        if target_column not in header:
            raise MissingColumn(target_column)
        raise ValueError(f"target column {target_column!r} is not among the regressors")
    _, _, data = _read_columns(path, feature_columns + [response_column])
    target = feature_columns.index(target_column)
    ds = Dataset.from_arrays(data[:, :-1], data[:, -1], target, feature_columns, intercept=intercept)
    object.__setattr__(ds, "response_name", response_column)
    return ds


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` so that :func:`load_csv` reproduces it bit for bit.

    The appended intercept column, if any, is omitted; reload with
    ``intercept=True``.
    """
    cols = [j for j in range(ds.d) if not (ds.has_intercept and np.all(ds.X[:, j] == 1.0))]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ds.column_names[j] for j in cols] + [ds.response_name])
        for i in range(ds.n):
            w.writerow([repr(float(ds.X[i, j])) for j in cols] + [repr(float(ds.y[i]))])


# ---------------------------------------------------------------------------
# Synthetic data.  numpy's PCG64 generator; normals via its ziggurat sampler.


def synth_2d(n: int, seed: int) -> Dataset:
    """``Y = -2 X + eps`` with ``X, eps ~ N(0, 1)``; intercept column appended last."""
    if n < 2:
        raise ValueError("synth_2d needs n >= 2")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    eps = rng.standard_normal(n)
    return Dataset.from_arrays(x[:, None], -2.0 * x + eps, 0, ["x"], intercept=True)


def synth_4d(n: int, seed: int) -> Dataset:
    """``Y = X1 + X2 + X3 + X4 + eps`` with iid standard normal entries, no intercept."""
    if n < 4:
        raise ValueError("synth_4d needs n >= 4")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 4))
    eps = rng.standard_normal(n)
    return Dataset.from_arrays(X, X.sum(axis=1) + eps, 0, ["x1", "x2", "x3", "x4"])


# ---------------------------------------------------------------------------
# Binary treatment view


@dataclass(frozen=True, eq=False)
class BinaryTreatmentView:
    """Responses split by a 0/1 treatment, negated if the full-data effect is negative.

    ``idx0`` / ``idx1`` map each response back to its row in the source data.
    """

    y0: np.ndarray
    y1: np.ndarray
    orientation: int
    idx0: np.ndarray
    idx1: np.ndarray

    @property
    def n(self) -> int:
        return self.y0.size + self.y1.size

    @classmethod
    def from_arrays(cls, treatment, y) -> "BinaryTreatmentView":
        t = as_vector(treatment, "treatment")
        y = as_vector(y, "y", t.size)
        if not np.all((t == 0.0) | (t == 1.0)):
            raise NotBinaryTreatment("treatment column takes values outside {0, 1}")
        idx0 = np.flatnonzero(t == 0.0)
        idx1 = np.flatnonzero(t == 1.0)
        if idx0.size == 0 or idx1.size == 0:
            raise EmptyGroup("both treatment groups must be nonempty")
        # Intercept + dummy regression: the slope is the difference of group means.
        slope = y[idx1].mean() - y[idx0].mean()
        orientation = -1 if slope < 0 else 1
        y = orientation * y
        return cls(y[idx0], y[idx1], orientation, idx0, idx1)

    def to_dataset(self) -> Dataset:
        """Rebuild a (treatment, intercept) dataset in the original response sign."""
        n = self.n
        t = np.zeros(n)
        t[self.idx1] = 1.0
        y = np.empty(n)
        y[self.idx0] = self.orientation * self.y0
        y[self.idx1] = self.orientation * self.y1
        return Dataset.from_arrays(t[:, None], y, 0, ["treatment"], intercept=True)


def binary_view(ds: Dataset) -> BinaryTreatmentView:
    """Project a (treatment, intercept) dataset onto its two response groups."""
    if ds.d != 2:
        raise NotBinaryTreatment(f"binary view needs exactly 2 columns, got {ds.d}")
    if not np.all(ds.X[:, 1 - ds.target] == 1.0):
        raise NotBinaryTreatment("binary view needs an intercept column next to the audited treatment")
    return BinaryTreatmentView.from_arrays(ds.X[:, ds.target], ds.y)


# ---------------------------------------------------------------------------
# Difference-in-differences


def did_design(before, after, treated) -> tuple[np.ndarray, np.ndarray]:
    """Stack a panel into the 4-column regression (intercept, time, treatment, interaction).

    Individual ``i`` contributes rows ``2i`` (before) and ``2i + 1`` (after).
    """
    before = as_vector(before, "before")
    after = as_vector(after, "after", before.size)
    mask = _treated_mask(treated, before.size)
    N = before.size
    X = np.zeros((2 * N, 4))
    X[:, 0] = 1.0
    X[1::2, 1] = 1.0
    X[0::2, 2] = mask
    X[1::2, 2] = mask
    X[1::2, 3] = mask
    y = np.empty(2 * N)
    y[0::2] = before
    y[1::2] = after
    return X, y


def did_covariance(n: float, s: float) -> np.ndarray:
    """Closed form of ``sum_i X_i X_i^T`` for ``n`` stacked rows of which ``s`` are treated."""
    h, k = n / 2.0, s / 2.0
    return np.array([[n, h, s, k],
                     [h, h, k, k],
                     [s, k, s, k],
                     [k, k, k, k]], dtype=float)


def did_adjugate(n: float, s: float) -> np.ndarray:
    """``det(Sigma) * Sigma^{-1}`` for :func:`did_covariance`, as a polynomial in (n, s)."""
    a = s * s * (n - s)
    b = n * s * (n - s)
    return np.array([[a, -a, -a, a],
                     [-a, 2 * a, a, -2 * a],
                     [-a, a, b, -b],
                     [a, -2 * a, -b, 2 * b]], dtype=float) / 8.0


def _treated_mask(treated, N: int) -> np.ndarray:
    arr = np.asarray(treated)
    if arr.dtype == bool:
        if arr.shape != (N,):
            raise ValueError("boolean treated mask must have one entry per individual")
        return arr.astype(float)
    mask = np.zeros(N)
    idx = arr.astype(int).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= N):
        raise ValueError("treated index out of range")
    mask[idx] = 1.0
    return mask


@dataclass(frozen=True, eq=False)
class DiDView:
    """Per-individual after-minus-before changes, split by treatment group."""

    deltas_treated: np.ndarray
    deltas_control: np.ndarray
    N: int
    orientation: int
    ids_treated: np.ndarray
    ids_control: np.ndarray

    @classmethod
    def from_deltas(cls, deltas_treated, deltas_control) -> "DiDView":
        """View built directly from deltas; orientation follows the mean-difference sign."""
        dt = as_vector(deltas_treated, "deltas_treated")
        dc = as_vector(deltas_control, "deltas_control")
        if dt.size == 0 or dc.size == 0:
            raise EmptyGroup("both groups must be nonempty")
        allmean = (dt.sum() + dc.sum()) / (dt.size + dc.size)
        orientation = -1 if dt.mean() - allmean < 0 else 1
        N = dt.size + dc.size
        return cls(orientation * dt, orientation * dc, N, orientation,
                   np.arange(dt.size), np.arange(dt.size, N))


def did_view(before, after, treated) -> DiDView:
    """Build the delta view; the orientation comes from a 4-column OLS fit."""
    before = as_vector(before, "before")
    after = as_vector(after, "after", before.size)
    mask = _treated_mask(treated, before.size).astype(bool)
    if not mask.any() or mask.all():
        raise EmptyGroup("treated must be a nonempty proper subset of individuals")
    X, y = did_design(before, after, mask)
    beta3 = ols_fit(X, y)[3]
    orientation = -1 if beta3 < 0 else 1
    delta = orientation * (after - before)
    ids_t = np.flatnonzero(mask)
    ids_c = np.flatnonzero(~mask)
    return DiDView(delta[ids_t], delta[ids_c], before.size, orientation, ids_t, ids_c)


@dataclass(frozen=True, eq=False)
class DiDPanel:
    """Raw two-period panel as read from a DiD CSV."""

    ids: tuple[str, ...]
    before: np.ndarray
    after: np.ndarray
    treated: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.before.size

    def view(self) -> DiDView:
        return did_view(self.before, self.after, self.treated.astype(bool))

    def design(self) -> tuple[np.ndarray, np.ndarray]:
        return did_design(self.before, self.after, self.treated.astype(bool))


def load_did_csv(path) -> DiDPanel:
    """Read a panel with columns ``id, before, after, treated`` (one individual per row)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(1, "", "<empty file>") from None
        for name in ("id", "before", "after", "treated"):
            if name not in header:
                raise MissingColumn(name)
        pos = {name: header.index(name) for name in ("id", "before", "after", "treated")}
        ids, before, after, treated = [], [], [], []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) < len(header):
                raise ParseError(lineno, header[len(record)], "<missing>")
            ids.append(record[pos["id"]].strip())
            before.append(_parse_cell(record[pos["before"]], lineno, "before"))
            after.append(_parse_cell(record[pos["after"]], lineno, "after"))
            t = _parse_cell(record[pos["treated"]], lineno, "treated")
            if t not in (0.0, 1.0):
                raise NotBinaryTreatment(f"row {lineno}: treated must be 0 or 1, got {t!r}")
            treated.append(t)
    return DiDPanel(tuple(ids), np.array(before), np.array(after), np.array(treated))


def write_did_csv(panel: DiDPanel, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "before", "after", "treated"])
        for i in range(panel.N):
            w.writerow([panel.ids[i], repr(float(panel.before[i])), repr(float(panel.after[i])),
                        int(panel.treated[i])])


def is_did_csv(path) -> bool:
    with open(path, newline="", encoding="utf-8") as fh:
        header = {h.strip() for h in next(csv.reader(fh), [])}
    return {"id", "before", "after", "treated"} <= header


def sha256_file(path) -> str:
    import hashlib

    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
