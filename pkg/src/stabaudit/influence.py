"""Influence-function heuristics giving verified upper bounds on Stability.

``amip_upper_bound`` ranks samples once by their first-order effect on the
target coefficient and drops the shortest flipping prefix.
``greedy_resolve_upper_bound`` drops one sample at a time and recomputes the
scores after every refit.
"""

from __future__ import annotations

import numpy as np

from .certificates import NoFlipFound, StabilityCertificate, is_flipped, upper_certificate
from .data import Dataset
from .linalg import coefficient_identified, ols_fit, pinv


def _scores(X: np.ndarray, y: np.ndarray, target: int, orientation: int) -> np.ndarray:
    G = pinv(X.T @ X)
    beta = G @ (X.T @ y)
    resid = y - X @ beta
    return orientation * (X @ G[:, target]) * resid


def influence_scores(ds: Dataset) -> np.ndarray:
    """First-order drop in the oriented target coefficient when each sample is removed.

    ``score_i = s * [(X^T X)^+ X_i]_target * (y_i - <X_i, beta>)`` with ``s`` the
    full-data orientation; larger scores mean removal pushes harder toward a flip.
    """
    return _scores(np.asarray(ds.X), np.asarray(ds.y), ds.target, ds.orientation)


def leverages(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.einsum("ij,jk,ik->i", X, pinv(X.T @ X), X)


def loo_effects(ds: Dataset) -> np.ndarray:
    """Exact change ``beta_{-i} - beta`` for every single-row deletion (Sherman-Morrison).

    Rows with leverage 1 (whose deletion makes the design lose rank) get NaN.
    """
    X, y = np.asarray(ds.X), np.asarray(ds.y)
    G = pinv(X.T @ X)
    beta = G @ (X.T @ y)
    resid = y - X @ beta
    h = np.einsum("ij,jk,ik->i", X, G, X)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(h < 1.0 - 1e-10, resid / (1.0 - h), np.nan)
    return -(X @ G) * factor[:, None]


def _ranking(scores: np.ndarray) -> np.ndarray:
    # Descending by score, ascending row index among ties.
    return np.lexsort((np.arange(scores.size), -scores))


def amip_upper_bound(ds: Dataset, max_remove: int | None = None):
    """Drop the top-scoring samples, scanning prefix lengths until a refit flips the sign.

    Returns a verified :class:`StabilityCertificate` or :class:`NoFlipFound`.
    """
    if is_flipped(ds, ()):
        return upper_certificate(ds, "amip", ())
    order = _ranking(influence_scores(ds))
    limit = ds.n - 1 if max_remove is None else min(max_remove, ds.n - 1)
    X, y, t, s = np.asarray(ds.X), np.asarray(ds.y), ds.target, ds.orientation
    keep = np.ones(ds.n, dtype=bool)
    tol = ds.flip_tolerance
    # Flips need not be monotone along the ranking, so every prefix is refit.
    for k in range(1, limit + 1):
        keep[order[k - 1]] = False
        Xk = X[keep]
        coef = s * ols_fit(Xk, y[keep])[t]
        if coef <= tol and coefficient_identified(Xk, t):
            return upper_certificate(ds, "amip", order[:k])
    return NoFlipFound("amip")


def greedy_resolve_upper_bound(ds: Dataset, max_iters: int | None = None):
    """Repeatedly remove the single most influential sample, refitting in between."""
    if is_flipped(ds, ()):
        return upper_certificate(ds, "greedy", ())
    limit = ds.n - 1 if max_iters is None else min(max_iters, ds.n - 1)
    X, y, t, s = np.asarray(ds.X), np.asarray(ds.y), ds.target, ds.orientation
    tol = ds.flip_tolerance
    alive = np.arange(ds.n)
    removed: list[int] = []
    for _ in range(limit):
        scores = _scores(X[alive], y[alive], t, s)
        pick = int(_ranking(scores)[0])
        removed.append(int(alive[pick]))
        alive = np.delete(alive, pick)
        Xk = X[alive]
        coef = s * ols_fit(Xk, y[alive])[t]
        if coef <= tol and coefficient_identified(Xk, t):
            return upper_certificate(ds, "greedy", removed)
    return NoFlipFound("greedy")


def certificate_or_none(result) -> StabilityCertificate | None:
    return result if isinstance(result, StabilityCertificate) else None
