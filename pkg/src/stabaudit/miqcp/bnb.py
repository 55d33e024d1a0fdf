"""Spatial branch-and-bound over McCormick relaxations.

Open nodes are kept in a best-bound priority queue (ties: deeper first, then
creation order), so a run is deterministic.  At each node the relaxation's
solution seeds the incumbent heuristics, then the node is split on the
bilinear pair with the largest violation ``|z_ij - w_i beta_j|``:

* while the coefficient interval of ``beta_j`` is wide, split it at the LP
  value (kept at least 5% of the width away from either end);
* once it is narrow, branch on a weight instead: to ``{0}`` / ``{1}`` in
  integral mode (the most fractional weight), or at the LP value in fractional
  mode.

Every returned dual bound is valid at any stopping point, and ``n`` minus it
is a lower bound on Stability among coefficient vectors inside the box.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..certificates import NoFlipFound, StabilityCertificate, upper_certificate
from ..data import Dataset
from ..linalg import coefficient_identified, weighted_ols_fit
from .lp import LPResult, LinearProgram, solve_lp
from .model import BilinearModel
from .relaxation import BnBNode, mccormick_relax, violation

KEEP_TOL = 1e-6
SETTLE_TOL = 1e-7
NARROW_RTOL = 1e-3
SPLIT_MARGIN = 0.05
INT_EPS = 1e-6
FRAC_GAP = 1e-4
SIMPLEX_MAX_ROWS = 400

__all__ = ["BnBNode", "BnBResult", "branch_and_bound", "round_and_verify", "fractional_incumbent"]


def round_and_verify(ds: Dataset, w, method: str = "miqcp", qualifiers=()):
    """Round weights (``w >= 1 - 1e-6`` kept, the rest dropped) and refit.

    Returns a verified upper :class:`StabilityCertificate` if the oriented
    target coefficient of the refit is ``<= 0``, otherwise :class:`NoFlipFound`.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (ds.n,):
        raise ValueError(f"expected {ds.n} weights, got shape {w.shape}")
    if np.any(w < -KEEP_TOL) or np.any(w > 1 + KEEP_TOL):
        raise ValueError("weights must lie in [0, 1]")
    removed = np.flatnonzero(w < 1.0 - KEEP_TOL)
    try:
        return upper_certificate(ds, method, removed, qualifiers=qualifiers)
    except ValueError:
        return NoFlipFound(method)


def _last_coef(model: BilinearModel, w: np.ndarray) -> float | None:
    Xw = model.X * np.sqrt(w)[:, None]
    if not coefficient_identified(Xw, model.d - 1):
        return None
    return float(weighted_ols_fit(model.X, model.y, w)[-1])


def fractional_incumbent(model: BilinearModel, w, iters: int = 60):
    """A fractional-mode objective value that is attainable starting from ``w``.

    If the weighted fit at ``w`` has audited coefficient ``<= 0``, weights are
    raised along ``w + t (1 - w)`` by bisection toward the full data (where
    the coefficient is positive).  The crossing point has coefficient exactly
    zero, so it is feasible; the returned value is the objective at the lower
    end of the final bracket, never above the crossing's.  Returns
    ``(value, weights)`` or ``None``.
    """
    w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
    c0 = _last_coef(model, w)
    if c0 is None or c0 > 0:
        return None
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        c = _last_coef(model, w + mid * (1.0 - w))
        if c is not None and c <= 0:
            lo = mid
        else:
            hi = mid
    v = w + lo * (1.0 - w)
    return float(v.sum()), v


@dataclass
class BnBResult:
    """Outcome of a branch-and-bound run.

    ``dual_bound`` bounds the optimum of ``sum(w)`` from above;
    ``incumbent_value`` is an attained objective (integral mode: a verified
    kept-set size).  ``history`` lists ``(nodes, seconds, dual_bound,
    incumbent_value)`` after each processed node.
    """

    mode: str
    n: int
    status: str
    dual_bound: float
    incumbent_value: float | None
    incumbent_w: np.ndarray | None
    certificate: StabilityCertificate | None
    nodes: int
    runtime_s: float
    B: float
    history: list = field(default_factory=list)

    @property
    def lower_bound(self) -> int:
        """``n - floor(dual_bound)``: a Stability lower bound within the coefficient box."""
        return max(0, self.n - math.floor(self.dual_bound + INT_EPS))

    @property
    def solved(self) -> bool:
        return self.status == "optimal"

    def qualifiers(self) -> tuple[str, ...]:
        q = [f"valid within |beta|_inf <= {self.B:.6g}"]
        if self.mode == "fractional":
            q.append("fractional relaxation")
        if not self.solved:
            q.append(f"stopped early ({self.status})")
        return tuple(q)

    def lower_certificate(self, method: str) -> StabilityCertificate:
        return StabilityCertificate(method, "lower", self.lower_bound, (), False, self.qualifiers(),
                                    {"dual_bound": self.dual_bound, "nodes": self.nodes,
                                     "status": self.status})


def _solve(lp: LinearProgram, lp_solver: str) -> LPResult:
    if lp_solver == "auto":
        method = "simplex" if lp.n_rows <= SIMPLEX_MAX_ROWS else "highs"
    else:
        method = lp_solver
    res = solve_lp(lp, method)
    if res.status in ("iteration_limit", "numerical") and method == "simplex":
        res = solve_lp(lp, "highs")
    return res


def branch_and_bound(model: BilinearModel, time_limit: float | None = 10.0,
                     node_limit: int | None = None, warm_start=None,
                     lp_solver: str = "auto", method: str | None = None) -> BnBResult:
    """Maximise ``sum(w)`` over the bilinear model.

    Parameters
    ----------
    model : BilinearModel
    time_limit : float or None
        Wall-clock budget in seconds; the bounds stay valid when it expires.
    node_limit : int or None
        Maximum number of processed nodes.
    warm_start : iterable of int, optional
        A removal set (row indices) whose verified refit seeds the incumbent.
    lp_solver : {"auto", "simplex", "highs"}
        ``auto`` uses the internal simplex for small relaxations and HiGHS
        for large ones.
    """
    ds = model.dataset
    if ds is None:
        raise ValueError("model was not built from a dataset")
    n, d, p = model.n, model.d, model.p
    integral = model.mode == "integral"
    method = method or ("miqcp-int" if integral else "miqcp-frac")
    t0 = time.perf_counter()

    inc_val: float = -np.inf
    inc_w: np.ndarray | None = None
    cert: StabilityCertificate | None = None

    def offer_removal_certificate(c):
        nonlocal cert, inc_val, inc_w
        if not isinstance(c, StabilityCertificate):
            return
        if cert is None or c.value < cert.value:
            cert = c
        if integral:
            kept = n - c.value
            if kept > inc_val:
                inc_val = float(kept)
                inc_w = ds.keep_mask(c.removed).astype(float)
        else:
            offer_fractional(ds.keep_mask(c.removed).astype(float))

    def offer_fractional(w):
        nonlocal inc_val, inc_w
        got = fractional_incumbent(model, w)
        if got is not None and got[0] > inc_val:
            inc_val, inc_w = got

    def prunable(bound: float) -> bool:
        if integral:
            return math.floor(bound + INT_EPS) <= inc_val
        return bound <= inc_val + FRAC_GAP

    def node_bound(bound: float) -> float:
        return float(math.floor(bound + INT_EPS)) if integral else bound

    if warm_start is not None:
        try:
            offer_removal_certificate(upper_certificate(ds, method, warm_start))
        except ValueError:
            pass
    # The empty removal set (all weights one) when the full data already flips.
    offer_removal_certificate(round_and_verify(ds, np.ones(n), method))

    counter = 0
    heap: list = []
    retired = -np.inf  # largest bound among nodes closed without being solved

    def evaluate(node: BnBNode, parent_bound: float) -> None:
        nonlocal counter, retired
        res = _solve(mccormick_relax(node, model), lp_solver)
        if res.status == "infeasible":
            return
        if not res.optimal:
            # Cannot refine this box; keep the parent's bound in the dual bound.
            retired = max(retired, parent_bound)
            return
        node.bound = min(res.value, parent_bound)
        node.solution = res.x
        counter += 1
        heapq.heappush(heap, (-node.bound, -node.depth, counter, node))

    root = BnBNode.root(model)
    evaluate(root, float(n))
    nodes = 0
    status = "optimal"
    history = []

    def current_dual() -> float:
        vals = [inc_val, retired, 0.0]
        if heap:
            vals.append(node_bound(-heap[0][0]))
        return max(vals)

    # The dual bound only ever decreases: each value is a valid bound on its own.
    dual = min(float(n), current_dual())
    while heap:
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            status = "time_limit"
            break
        if node_limit is not None and nodes >= node_limit:
            status = "node_limit"
            break
        _, _, _, node = heapq.heappop(heap)
        if prunable(node.bound):
            if not integral:
                retired = max(retired, node.bound)
            continue
        nodes += 1
        x = node.solution
        w = np.clip(x[:n], 0.0, 1.0)
        offer_removal_certificate(round_and_verify(ds, w, method))
        if not integral:
            offer_fractional(w)
        if prunable(node.bound):
            if not integral:
                retired = max(retired, node.bound)
        else:
            beta = x[n:n + d]
            rel = violation(model, x) / (1.0 + np.abs(beta[None, :p])) if p else np.zeros((n, 0))
            children = _branch(node, model, x, rel, integral)
            if children is None:
                retired = max(retired, node_bound(node.bound))
            else:
                for child in children:
                    evaluate(child, node.bound)
        dual = min(dual, current_dual())
        history.append((nodes, time.perf_counter() - t0, dual, inc_val if inc_w is not None else None))

    runtime = time.perf_counter() - t0
    return BnBResult(model.mode, n, status, float(dual),
                     float(inc_val) if inc_w is not None else None, inc_w, cert, nodes, runtime,
                     model.B, history)


def _branch(node: BnBNode, model: BilinearModel, x: np.ndarray, rel: np.ndarray, integral: bool):
    """Children of ``node``, or ``None`` if the box is settled (nothing left to split)."""
    n, d = model.n, model.d
    w = x[:n]
    if rel.size == 0 or rel.max() <= SETTLE_TOL:
        if not integral:
            return None
        frac = np.minimum(w - node.w_lo, node.w_hi - w)
        if frac.max(initial=0.0) <= KEEP_TOL:
            return None
        return _branch_weight(node, int(np.argmax(frac)))
    i, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    lo, hi = node.beta_lo[j], node.beta_hi[j]
    bj = x[n + j]
    if hi - lo > NARROW_RTOL * max(1.0, abs(bj)):
        cut = min(max(bj, lo + SPLIT_MARGIN * (hi - lo)), hi - SPLIT_MARGIN * (hi - lo))
        up, down = node.beta_hi.copy(), node.beta_lo.copy()
        up[j] = cut
        down[j] = cut
        return [node.child(beta_hi=up), node.child(beta_lo=down)]
    if integral:
        frac = np.minimum(w - node.w_lo, node.w_hi - w)
        if frac.max(initial=0.0) <= KEEP_TOL:
            return None
        return _branch_weight(node, int(np.argmax(frac)))
    wl, wh = node.w_lo[i], node.w_hi[i]
    if wh - wl <= 1e-9:
        return None
    cut = min(max(w[i], wl + SPLIT_MARGIN * (wh - wl)), wh - SPLIT_MARGIN * (wh - wl))
    up, down = node.w_hi.copy(), node.w_lo.copy()
    up[i] = cut
    down[i] = cut
    return [node.child(w_hi=up), node.child(w_lo=down)]


def _branch_weight(node: BnBNode, k: int):
    up, down = node.w_hi.copy(), node.w_lo.copy()
    up[k] = 0.0
    down[k] = 1.0
    return [node.child(w_hi=up), node.child(w_lo=down)]
