"""McCormick relaxation of the bilinear program over a box of weights and coefficients."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .lp import LinearProgram
from .model import BilinearModel

_counter = itertools.count()


@dataclass(eq=False)
class BnBNode:
    """A box ``w in [w_lo, w_hi]``, ``beta in [beta_lo, beta_hi]`` and its relaxation bound."""

    w_lo: np.ndarray
    w_hi: np.ndarray
    beta_lo: np.ndarray
    beta_hi: np.ndarray
    bound: float = np.inf
    depth: int = 0
    order: int = field(default_factory=lambda: next(_counter))
    solution: np.ndarray | None = None

    @classmethod
    def root(cls, model: BilinearModel) -> "BnBNode":
        lo, hi = model.beta_bounds()
        return cls(np.zeros(model.n), np.ones(model.n), lo, hi, order=0)

    def child(self, **bounds) -> "BnBNode":
        """Copy of this box with some bound arrays replaced; bound starts at the parent's."""
        parts = {k: getattr(self, k).copy() for k in ("w_lo", "w_hi", "beta_lo", "beta_hi")}
        parts.update(bounds)
        return BnBNode(**parts, bound=self.bound, depth=self.depth + 1)

    def contains(self, w, beta, tol: float = 0.0) -> bool:
        w, beta = np.asarray(w), np.asarray(beta)
        return bool(np.all(w >= self.w_lo - tol) and np.all(w <= self.w_hi + tol)
                    and np.all(beta >= self.beta_lo - tol) and np.all(beta <= self.beta_hi + tol))


def envelope(xl, xu, yl, yu, x, y):
    """Range of ``z`` allowed by the four McCormick planes at the point ``(x, y)``.

    Returns ``(z_min, z_max)``: the larger of the two under-estimators and the
    smaller of the two over-estimators.
    """
    under = np.maximum(xl * y + yl * x - xl * yl, xu * y + yu * x - xu * yu)
    over = np.minimum(xu * y + yl * x - xu * yl, xl * y + yu * x - xl * yu)
    return under, over


def _corner_range(xl, xu, yl, yu):
    c = np.stack([xl * yl, xl * yu, xu * yl, xu * yu])
    return c.min(axis=0), c.max(axis=0)


def mccormick_relax(node: BnBNode, model: BilinearModel, dense: bool | None = None) -> LinearProgram:
    """Linear relaxation of ``model`` restricted to ``node``'s box.

    Each product ``w_i beta_j`` is replaced by ``z_ij`` subject to its four
    McCormick inequalities; the stationarity equations become linear in
    ``(w, z)``.  The result is a maximisation LP over ``(w, beta, z)``.
    """
    n, d, p = model.n, model.d, model.p
    nv = model.n_vars
    if not (np.all(np.isfinite(node.beta_lo)) and np.all(np.isfinite(node.beta_hi))):
        raise ValueError("node bounds must be finite")
    wl, wu = node.w_lo[:, None], node.w_hi[:, None]
    bl, bu = node.beta_lo[None, :p], node.beta_hi[None, :p]
    I = np.repeat(np.arange(n), p)
    J = np.tile(np.arange(p), n)
    zcol = n + d + I * p + J
    bcol = n + J
    wcol = I
    ones = np.ones(n * p)

    def flat(a):
        return np.broadcast_to(a, (n, p)).ravel()

    # Each plane written as  cw*w + cb*beta + cz*z <= rhs.
    planes = [
        (flat(bl), flat(wl), -ones, flat(wl * bl)),     # z >= wl*b + bl*w - wl*bl
        (flat(bu), flat(wu), -ones, flat(wu * bu)),     # z >= wu*b + bu*w - wu*bu
        (-flat(bl), -flat(wu), ones, -flat(wu * bl)),   # z <= wu*b + bl*w - wu*bl
        (-flat(bu), -flat(wl), ones, -flat(wl * bu)),   # z <= wl*b + bu*w - wl*bu
    ]
    m = n * p
    rows, cols, vals, rhs = [], [], [], []
    for k, (cw, cb, cz, r) in enumerate(planes):
        ridx = k * m + np.arange(m)
        rows += [ridx, ridx, ridx]
        cols += [wcol, bcol, zcol]
        vals += [cw, cb, cz]
        rhs.append(r)
    extra = model.linear_rows()
    A_mc = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(4 * m, nv)).tocsr()
    b_ub = np.concatenate(rhs + [np.array([r for _, _, r in extra])])
    if extra:
        A_ub = sparse.vstack([A_mc, sparse.csr_matrix(np.array([row for _, row, _ in extra]))]).tocsr()
    else:
        A_ub = A_mc
    A_eq = model.stationarity_matrix()
    # Normalise stationarity rows; their scale is that of X^2 y.
    norms = np.abs(A_eq).max(axis=1)
    A_eq = A_eq / np.where(norms > 0, norms, 1.0)[:, None]

    zlo, zhi = _corner_range(wl, wu, bl, bu)
    lb = np.concatenate([node.w_lo, node.beta_lo, zlo.ravel()])
    ub = np.concatenate([node.w_hi, node.beta_hi, zhi.ravel()])
    if dense is None:
        dense = A_ub.shape[0] <= 2000
    if dense:
        A_ub = A_ub.toarray()
    return LinearProgram(model.objective(), A_ub, b_ub, A_eq, np.zeros(d), lb, ub, maximize=True)


def violation(model: BilinearModel, x: np.ndarray) -> np.ndarray:
    """``|z_ij - w_i beta_j|`` at an LP point, as an ``(n, p)`` array."""
    n, d, p = model.n, model.d, model.p
    w, beta = x[:n], x[n:n + d]
    z = x[n + d:].reshape(n, p)
    return np.abs(z - w[:, None] * beta[None, :p])
