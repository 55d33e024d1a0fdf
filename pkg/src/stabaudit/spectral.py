"""Spectral lower bound on Stability.

Two spectral norms summarise the data: ``C1`` bounds the second moment of the
per-sample gradients in every direction, ``C2`` the fourth moment of the
whitened covariates.  Any removal set that flips the target coefficient must
then contain at least ``eps * n`` samples, where

    eps = beta_i^2 / (C1 * sqrt((Sigma^-1)_ii) + C2 * |beta_i|)^2 .

The bound holds for every dataset; no distributional assumption is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import SingularCovariance
from .linalg import ols_fit, spectral_norm, sym_inv_sqrt

COND_LIMIT = 1e10


@dataclass(frozen=True)
class SpectralCertificate:
    C1: float
    C2: float
    epsilon: float
    lower_bound: int
    beta_i: float
    n: int
    epsilon_unsquared: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.C1 < 0 or self.C2 < 0:
            raise ValueError("constants must be nonnegative")
        if self.lower_bound > self.n:
            raise ValueError("lower bound exceeds n")


def fourth_moment_weight(d: int) -> np.ndarray:
    """``(2/3 I + 1/3 Phi Phi^T)^{-1/2}`` on ``R^{d*d}``, with ``Phi`` the flattened identity."""
    phi = np.eye(d).reshape(-1)
    P = np.outer(phi, phi) / d
    return math.sqrt(3.0 / (2.0 + d)) * P + math.sqrt(1.5) * (np.eye(d * d) - P)


def _covariance(X: np.ndarray) -> np.ndarray:
    return X.T @ X / X.shape[0]


def spectral_constants(ds: Dataset):
    """Return ``(C1, C2, beta, Sigma)`` for the full data."""
    X, y = np.asarray(ds.X), np.asarray(ds.y)
    n, d = X.shape
    Sigma = _covariance(X)
    ev = np.linalg.eigvalsh(Sigma)
    if ev[0] <= 0 or ev[-1] / ev[0] > COND_LIMIT:
        raise SingularCovariance("sample covariance is singular or too ill-conditioned")
    beta = ols_fit(X, y)
    resid = X @ beta - y
    M1 = (X * resid[:, None]).T
    R = sym_inv_sqrt(Sigma)
    C1 = spectral_norm(R @ M1) / math.sqrt(n)
    Z = X @ R
    M2 = np.einsum("ni,nj->ijn", Z, Z).reshape(d * d, n)
    C2 = spectral_norm(fourth_moment_weight(d) @ M2 / math.sqrt(n))
    return C1, C2, beta, Sigma


def spectral_lower_bound(ds: Dataset) -> SpectralCertificate:
    """Lower-bound certificate: every flipping removal set has at least ``lower_bound`` rows."""
    C1, C2, beta, Sigma = spectral_constants(ds)
    n = ds.n
    b = float(beta[ds.target])
    if b == 0.0:
        return SpectralCertificate(C1, C2, 0.0, 0, b, n, 0.0)
    sii = float(np.linalg.inv(Sigma)[ds.target, ds.target])
    denom = C1 * math.sqrt(sii) + C2 * abs(b)
    eps = min(1.0, b * b / denom**2)
    eps_unsq = b * b / denom
    # Subtract a hair before the ceiling so rounding never inflates the bound.
    lb = max(0, min(n, math.ceil(eps * n - 1e-9 * max(1.0, eps * n))))
    return SpectralCertificate(C1, C2, eps, lb, b, n, eps_unsq)


def verify_envelope_constants(ds: Dataset, C1: float, C2: float, trials: int = 10_000,
                              seed: int = 0, include_extremal: bool = True, rtol: float = 1e-9) -> bool:
    """Check both moment inequalities on random unit directions.

    The inequalities use the squared constants:
    ``mean <X_i,v>^2 r_i^2 <= C1^2 <v, Sigma v>`` and
    ``mean <X_i,v>^4 <= C2^2 <v, Sigma v>^2``.  With ``include_extremal`` the
    direction maximising the first ratio is tested as well.
    """
    X, y = np.asarray(ds.X), np.asarray(ds.y)
    n, d = X.shape
    Sigma = _covariance(X)
    resid = X @ ols_fit(X, y) - y
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((trials, d))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    if include_extremal:
        R = sym_inv_sqrt(Sigma)
        M1 = (X * resid[:, None]).T
        u = np.linalg.svd(R @ M1, full_matrices=False)[0][:, 0]
        v = R @ u
        V = np.vstack([V, v / np.linalg.norm(v)])
    P = X @ V.T
    quad = np.einsum("td,de,te->t", V, Sigma, V)
    grad = np.mean(P**2 * resid[:, None] ** 2, axis=0)
    fourth = np.mean(P**4, axis=0)
    ok1 = grad <= C1**2 * quad * (1 + rtol) + 1e-300
    ok2 = fourth <= C2**2 * quad**2 * (1 + rtol) + 1e-300
    return bool(np.all(ok1) and np.all(ok2))
