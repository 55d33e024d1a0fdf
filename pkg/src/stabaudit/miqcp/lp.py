"""Linear programs and a dense bounded-variable simplex solver.

The solver works on ``min c^T x`` subject to ``A_ub x <= b_ub``,
``A_eq x = b_eq`` and ``lb <= x <= ub``.  Inequality rows get a slack column;
rows whose starting residual cannot be absorbed by a slack get an artificial
column for phase 1.  The basis inverse is kept explicitly and updated by
rank-one (eta) steps, with a fresh factorisation every ``REFACTOR`` pivots.
Pricing is Dantzig's rule; after a run of degenerate pivots it falls back to
Bland's rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import sparse

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR = 60
DEGENERATE_LIMIT = 30

Status = Literal["optimal", "infeasible", "unbounded", "iteration_limit", "numerical"]


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        object.__setattr__(self, "c", c)
        for A, b, name in (("A_ub", "b_ub", "ub"), ("A_eq", "b_eq", "eq")):
            Am, bm = getattr(self, A), getattr(self, b)
            if Am is None:
                Am, bm = np.zeros((0, n)), np.zeros(0)
            if sparse.issparse(Am):
                Am = sparse.csr_matrix(Am, dtype=float)
                if Am.shape[1] != n:
                    raise ValueError(f"{A} has {Am.shape[1]} columns, expected {n}")
            else:
                Am = np.asarray(Am, dtype=float).reshape(-1, n)
            bm = np.asarray(bm, dtype=float).ravel()
            if Am.shape[0] != bm.size:
                raise ValueError(f"{A} has {Am.shape[0]} rows but {b} has {bm.size} entries")
            object.__setattr__(self, A, Am)
            object.__setattr__(self, b, bm)
        lb = np.zeros(n) if self.lb is None else np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        ub = np.full(n, np.inf) if self.ub is None else np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A_ub.shape[0] + self.A_eq.shape[0]


@dataclass(frozen=True, eq=False)
class LPResult:
    status: Status
    value: float | None = None
    x: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Simplex:
    """Working state of one bounded-variable revised simplex run."""

    def __init__(self, A, b, lo, hi, basis, x):
        self.A, self.b, self.lo, self.hi = A, b, lo, hi
        self.m, self.N = A.shape
        self.basis = basis
        self.x = x
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[basis] = True
        self.iterations = 0
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B)
        self.since_refactor = 0
        nb = ~self.is_basic
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs

    def run(self, cost, max_iter) -> str:
        degenerate = 0
        scale = max(1.0, float(np.abs(cost).max(initial=0.0)))
        free = ~np.isfinite(self.lo) & ~np.isfinite(self.hi)
        fixed = self.lo == self.hi
        fin_lo, fin_hi = np.isfinite(self.lo), np.isfinite(self.hi)
        lo_f, hi_f = np.where(fin_lo, self.lo, 0.0), np.where(fin_hi, self.hi, 0.0)
        while True:
            if self.iterations >= max_iter:
                return "iteration_limit"
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            at_lo = fin_lo & (self.x <= self.lo + FEAS_TOL * (1 + np.abs(lo_f)))
            at_hi = fin_hi & (self.x >= self.hi - FEAS_TOL * (1 + np.abs(hi_f)))
            tol = OPT_TOL * scale
            can_up = ~self.is_basic & ~fixed & (d < -tol) & (~at_hi | free)
            can_dn = ~self.is_basic & ~fixed & (d > tol) & (~at_lo | free)
            eligible = can_up | can_dn
            if not eligible.any():
                return "optimal"
            if degenerate >= DEGENERATE_LIMIT:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if can_up[q] else -1.0
            alpha = self.Binv @ self.A[:, q]
            # Basic variables move by -direction * theta * alpha.
            move = -direction * alpha
            xb = self.x[self.basis]
            lob, hib = self.lo[self.basis], self.hi[self.basis]
            ratios = np.full(self.m, np.inf)
            relaxed = np.full(self.m, np.inf)
            piv_tol = PIVOT_TOL * max(1.0, float(np.abs(alpha).max(initial=0.0)))
            dec = move < -piv_tol
            inc = move > piv_tol
            ratios[dec] = (xb[dec] - lob[dec]) / -move[dec]
            ratios[inc] = (hib[inc] - xb[inc]) / move[inc]
            ratios = np.maximum(ratios, 0.0)
            # Harris two-pass test: allow bound violations up to FEAS_TOL so a
            # larger (numerically safer) pivot can be chosen among near-ties.
            relaxed[dec] = (xb[dec] - lob[dec] + FEAS_TOL) / -move[dec]
            relaxed[inc] = (hib[inc] - xb[inc] + FEAS_TOL) / move[inc]
            flip = self.hi[q] - self.lo[q]
            theta_h = relaxed.min(initial=np.inf)
            if not np.isfinite(theta_h) and not np.isfinite(flip):
                return "unbounded"
            self.iterations += 1
            if flip <= ratios.min(initial=np.inf):
                self.x[q] += direction * flip
                self.x[self.basis] = xb + flip * move
                degenerate = 0
                continue
            if degenerate >= DEGENERATE_LIMIT:
                theta = ratios.min()
                ties = np.flatnonzero(ratios <= theta + 1e-12 * (1 + theta))
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                cand = np.flatnonzero(ratios <= max(theta_h, 0.0))
                if not cand.size:
                    cand = np.array([int(np.argmin(ratios))])
                r = int(cand[np.argmax(np.abs(alpha[cand]))])
                theta = ratios[r]
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            leaving = self.basis[r]
            self.x[q] += direction * theta
            self.x[self.basis] = xb + theta * move
            self.x[leaving] = lob[r] if move[r] < 0 else hib[r]
            # Eta update of the explicit inverse.
            piv = alpha[r]
            row = self.Binv[r] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[r] = row
            self.basis[r] = q
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR:
                try:
                    self.refactor()
                except np.linalg.LinAlgError:
                    return "numerical"


def _dense(A):
    return A.toarray() if sparse.issparse(A) else A


def _start_value(lo, hi):
    return np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))


def simplex(lp: LinearProgram, max_iter: int = 50_000) -> LPResult:
    """Solve ``lp`` with the internal two-phase simplex."""
    n = lp.n_vars
    m_ub, m_eq = lp.A_ub.shape[0], lp.A_eq.shape[0]
    m = m_ub + m_eq
    if np.any(lp.lb > lp.ub + FEAS_TOL):
        return LPResult("infeasible")
    lb, ub = lp.lb.copy(), lp.ub.copy()
    c = -lp.c if lp.maximize else lp.c.copy()
    if m == 0:
        x = np.where(c > 0, lb, np.where(c < 0, ub, _start_value(lb, ub)))
        if not np.all(np.isfinite(x)):
            return LPResult("unbounded")
        val = float(lp.c @ x)
        return LPResult("optimal", val, x)

    A_rows = np.vstack([_dense(lp.A_ub), _dense(lp.A_eq)])
    b = np.concatenate([lp.b_ub, lp.b_eq])
    x0 = _start_value(lb, ub)
    resid = b - A_rows @ x0
    # Slack s_i >= 0 absorbs row i when its residual is nonnegative.
    slack_ok = np.zeros(m, dtype=bool)
    slack_ok[:m_ub] = resid[:m_ub] >= 0
    need_art = np.flatnonzero(~slack_ok)
    n_art = need_art.size
    N = n + m_ub + n_art
    A = np.zeros((m, N))
    A[:, :n] = A_rows
    A[np.arange(m_ub), n + np.arange(m_ub)] = 1.0
    sign = np.where(resid[need_art] >= 0, 1.0, -1.0)
    A[need_art, n + m_ub + np.arange(n_art)] = sign
    lo = np.concatenate([lb, np.zeros(m_ub), np.zeros(n_art)])
    hi = np.concatenate([ub, np.full(m_ub, np.inf), np.full(n_art, np.inf)])
    x = np.concatenate([x0, np.zeros(m_ub), np.zeros(n_art)])
    basis = np.empty(m, dtype=int)
    slack_rows = np.flatnonzero(slack_ok)
    basis[slack_rows] = n + slack_rows
    basis[need_art] = n + m_ub + np.arange(n_art)
    x[n + slack_rows] = resid[slack_rows]
    x[n + m_ub + np.arange(n_art)] = np.abs(resid[need_art])

    S = _Simplex(A, b, lo, hi, basis, x)
    art = slice(n + m_ub, N)
    if n_art:
        cost1 = np.zeros(N)
        cost1[art] = 1.0
        status = S.run(cost1, max_iter)
        if status in ("iteration_limit", "numerical"):
            return LPResult(status, iterations=S.iterations)
        infeas = S.x[art].sum()
        if infeas > FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
            return LPResult("infeasible", iterations=S.iterations)
        S.hi[n + m_ub:] = 0.0
        S.x[n + m_ub:] = 0.0
        try:
            S.refactor()
        except np.linalg.LinAlgError:
            return LPResult("numerical", iterations=S.iterations)
    cost2 = np.zeros(N)
    cost2[:n] = c
    status = S.run(cost2, max_iter)
    if status != "optimal":
        return LPResult(status, iterations=S.iterations)
    xs = np.clip(S.x[:n], lb, ub)
    return LPResult("optimal", float(lp.c @ xs), xs, S.iterations)


def highs(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` with SciPy's HiGHS backend (used for large relaxations)."""
    from scipy.optimize import linprog

    c = -lp.c if lp.maximize else lp.c
    has_ub, has_eq = lp.A_ub.shape[0] > 0, lp.A_eq.shape[0] > 0
    res = linprog(c, A_ub=lp.A_ub if has_ub else None, b_ub=lp.b_ub if has_ub else None,
                  A_eq=lp.A_eq if has_eq else None, b_eq=lp.b_eq if has_eq else None,
                  bounds=np.column_stack([lp.lb, lp.ub]), method="highs")
    if res.status == 0:
        x = np.clip(res.x, lp.lb, lp.ub)
        return LPResult("optimal", float(lp.c @ x), x, int(getattr(res, "nit", 0)))
    if res.status == 2:
        return LPResult("infeasible")
    if res.status == 3:
        return LPResult("unbounded")
    return LPResult("iteration_limit")


def solve_lp(lp: LinearProgram, method: str = "simplex") -> LPResult:
    """Solve a linear program; ``method`` is ``"simplex"`` (internal) or ``"highs"``."""
    if method == "simplex":
        return simplex(lp)
    if method == "highs":
        return highs(lp)
    raise ValueError(f"unknown LP method {method!r}")
