"""Dense linear-algebra kernel used throughout the package.

All routines take plain ``numpy`` arrays.  Rank deficiency is handled with a
pseudoinverse whose singular-value cutoff is ``RCOND * sigma_max``; no routine
here ever calls ``numpy.linalg.inv`` on a normal-equations matrix.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NotSymmetric

RCOND = 1e-10
SYM_TOL = 1e-10


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Return ``A`` as a finite 2-D float array, raising ``ValueError`` otherwise."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


def as_vector(v, name: str = "v", length: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


def _svd_solve(X: np.ndarray, y: np.ndarray):
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(X.shape[1]), 0, Vt[:0]
    keep = s > RCOND * s[0]
    rank = int(keep.sum())
    coef = Vt[:rank].T @ ((U[:, :rank].T @ y) / s[:rank])
    return coef, rank, Vt[:rank]


def ols_fit(X, y, *, return_rank: bool = False):
    """Least-squares coefficients, minimum-norm when ``X`` is rank deficient.

    Parameters
    ----------
    X : array of shape (n, d)
    y : array of shape (n,)
    return_rank : bool
        Also return the numerical rank of ``X``.

    Returns
    -------
    coef : ndarray of shape (d,)
    rank : int, only when ``return_rank`` is true
    """
    X = as_matrix(X, "X")
    y = as_vector(y, "y", X.shape[0])
    if X.shape[0] == 0:
        coef, rank = np.zeros(X.shape[1]), 0
    else:
        coef, rank, _ = _svd_solve(X, y)
    return (coef, rank) if return_rank else coef


def weighted_ols_fit(X, y, w, *, return_rank: bool = False):
    """Minimise ``sum_i w_i (<X_i, beta> - y_i)^2`` for nonnegative weights."""
    X = as_matrix(X, "X")
    w = as_vector(w, "w", X.shape[0])
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    sw = np.sqrt(w)
    return ols_fit(X * sw[:, None], as_vector(y, "y", X.shape[0]) * sw, return_rank=return_rank)


def pinv(A) -> np.ndarray:
    return np.linalg.pinv(as_matrix(A), rcond=RCOND)


def coefficient_identified(X, index: int, tol: float = 1e-8) -> bool:
    """Whether coordinate ``index`` of the least-squares fit is pinned down by ``X``.

    True iff the standard basis vector ``e_index`` lies in the row space of ``X``;
    otherwise some direction in the null space moves that coefficient freely.
    """
    X = as_matrix(X, "X")
    if X.shape[0] == 0:
        return False
    _, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s[0] == 0.0:
        return False
    V = Vt[s > RCOND * s[0]]
    return bool(np.sum(V[:, index] ** 2) >= 1.0 - tol)


def sym_inv_sqrt(A) -> np.ndarray:
    """Pseudo inverse square root of a symmetric positive semidefinite matrix.

    Eigenvalues below ``1e-10 * lambda_max`` are treated as zero, so
    ``B @ A @ B`` is the orthogonal projector onto the range of ``A``.
    """
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if np.abs(A - A.T).max(initial=0.0) > SYM_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    lam, V = np.linalg.eigh((A + A.T) / 2.0)
    top = lam[-1] if lam.size else 0.0
    if lam.size and lam[0] < -SYM_TOL * scale:
        raise ValueError("matrix is not positive semidefinite")
    inv_sqrt = np.zeros_like(lam)
    keep = lam > RCOND * top
    inv_sqrt[keep] = 1.0 / np.sqrt(lam[keep])
    B = (V * inv_sqrt) @ V.T
    return (B + B.T) / 2.0


def _power_seed(m: int) -> np.ndarray:
    v = 1.0 + 1e-3 * np.sin(np.arange(1, m + 1))
    return v / np.linalg.norm(v)


def _top_eigenvalue(G: np.ndarray, rtol: float, max_iter: int) -> float:
    m = G.shape[0]
    # Squaring makes each power step worth 2**s plain steps; only cheap for small Gram matrices.
    H = G.copy()
    if m <= 256:
        for _ in range(8):
            H = H @ H
            nrm = np.linalg.norm(H)
            if nrm == 0.0 or not np.isfinite(nrm):
                H = G
                break
            H /= nrm
    v = _power_seed(m)
    lam_prev = -np.inf
    for _ in range(max_iter):
        u = H @ v
        nrm = np.linalg.norm(u)
        if nrm == 0.0:
            break
        v = u / nrm
        Gv = G @ v
        lam = float(v @ Gv)
        resid = np.linalg.norm(Gv - lam * v)
        if resid <= rtol * abs(lam) or abs(lam - lam_prev) <= 1e-15 * abs(lam):
            return lam
        lam_prev = lam
    return float(v @ (G @ v))


def spectral_norm(A, rtol: float = 1e-11, max_iter: int = 20000) -> float:
    """Largest singular value of ``A`` by power iteration on the smaller Gram matrix.

    The seed vector is fixed, so the result is reproducible bit for bit.
    """
    A = as_matrix(A)
    if A.size == 0:
        raise ValueError("matrix must be nonempty")
    scale = float(np.abs(A).max())
    if scale == 0.0:
        return 0.0
    A = A / scale
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    lam = _top_eigenvalue(G, rtol, max_iter)
    return float(np.sqrt(max(lam, 0.0)) * scale)
