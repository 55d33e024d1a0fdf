"""Exhaustive Stability computation for small instances.

This is the deliberately naive reference every other method is tested
against: enumerate removal sets by increasing size, in lexicographic order,
refit, and stop at the first sign flip.  Subsets whose kept design leaves the
target coefficient unidentified never count as flips.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

from .certificates import NoFlipWithin
from .data import FLIP_ATOL, FLIP_RTOL, Dataset, DiDView
from .exceptions import TooLarge
from .linalg import RCOND

MAX_SUBSETS = 20_000_000
_CHUNK = 8192


def _check_guard(n: int, max_k: int) -> None:
    if not (n <= 20 or max_k <= 3):
        raise TooLarge(f"brute force refuses n={n} with max_k={max_k} (needs n <= 20 or max_k <= 3)")
    total = sum(comb(n, k) for k in range(max_k + 1))
    if total > MAX_SUBSETS:
        raise TooLarge(f"brute force would enumerate {total} subsets (limit {MAX_SUBSETS})")


def _combos(n: int, k: int):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=int).reshape(len(block), k)


def _batch_target_coef(X: np.ndarray, y: np.ndarray, target: int, removed: np.ndarray):
    """Target coefficient of each masked refit, NaN where it is not identified."""
    m = removed.shape[0]
    keep = np.ones((m, X.shape[0]))
    if removed.shape[1]:
        keep[np.arange(m)[:, None], removed] = 0.0
    Xs = keep[:, :, None] * X[None]
    U, s, Vt = np.linalg.svd(Xs, full_matrices=False)
    smax = s[:, :1]
    ok = (s > RCOND * smax) & (smax > 0)
    inv = np.where(ok, 1.0 / np.where(ok, s, 1.0), 0.0)
    Uty = np.einsum("mnr,mn->mr", U, keep * y[None])
    coef_t = np.einsum("mr,mr->m", Vt[:, :, target], inv * Uty)
    identified = np.sum(np.where(ok, Vt[:, :, target] ** 2, 0.0), axis=1) >= 1.0 - 1e-8
    return np.where(identified, coef_t, np.nan)


def brute_force_stability(ds: Dataset, max_k: int, *, return_set: bool = False):
    """Smallest number of rows whose removal drives the oriented target coefficient to <= 0.

    Returns an ``int`` (or ``(int, removed)`` with ``return_set``) or a
    :class:`NoFlipWithin` if no set of at most ``max_k`` rows works.
    """
    n = ds.n
    max_k = min(int(max_k), n)
    _check_guard(n, max_k)
    s = ds.orientation
    tol = ds.flip_tolerance
    X, y = np.asarray(ds.X), np.asarray(ds.y)
    for k in range(max_k + 1):
        for removed in _combos(n, k):
            coef = s * _batch_target_coef(X, y, ds.target, removed)
            hits = np.flatnonzero(coef <= tol)
            if hits.size:
                first = tuple(int(i) for i in removed[hits[0]])
                return (k, first) if return_set else k
    return NoFlipWithin(max_k)


def brute_force_did(view: DiDView, max_k: int, *, return_set: bool = False):
    """Exhaustive search over removals of whole individuals (before/after pairs).

    The sign of the interaction coefficient on a kept set equals the sign of
    (mean treated change) - (mean overall change); both groups must stay nonempty.
    """
    N = view.N
    max_k = min(int(max_k), N)
    _check_guard(N, max_k)
    delta = np.empty(N)
    treated = np.zeros(N, dtype=bool)
    delta[view.ids_treated] = view.deltas_treated
    delta[view.ids_control] = view.deltas_control
    treated[view.ids_treated] = True
    full_gap = view.deltas_treated.mean() - delta.mean()
    tol = FLIP_RTOL * abs(full_gap) + FLIP_ATOL * np.abs(delta).max()
    for k in range(max_k + 1):
        for removed in _combos(N, k):
            keep = np.ones((removed.shape[0], N), dtype=bool)
            if k:
                keep[np.arange(removed.shape[0])[:, None], removed] = False
            kt = keep & treated[None]
            n_t = kt.sum(axis=1)
            n_all = keep.sum(axis=1)
            valid = (n_t >= 1) & (n_all - n_t >= 1)
            with np.errstate(invalid="ignore", divide="ignore"):
                gap = (kt @ delta) / n_t - (keep @ delta) / n_all
            hits = np.flatnonzero(valid & (gap <= tol))
            if hits.size:
                first = tuple(int(i) for i in removed[hits[0]])
                return (k, first) if return_set else k
    return NoFlipWithin(max_k)
