"""Exact Stability of the difference-in-differences interaction coefficient.

Removals act on whole individuals.  The interaction coefficient on a kept set
has the sign of (mean treated change) - (mean overall change), so for a fixed
number of removals it is best to drop the treated individuals with the largest
change and the controls with the smallest.  Binary search over the number of
removals then gives the exact minimum in ``O(N log N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import NoFlipPossible
from .data import FLIP_ATOL, FLIP_RTOL, DiDView, _treated_mask, did_design
from .linalg import ols_fit

_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiDPrefixSums:
    """``ST[l]``: sum of the ``l`` smallest treated changes; ``SC[l]``: the ``l`` largest controls."""

    ST: np.ndarray
    SC: np.ndarray
    order_t: np.ndarray
    order_c: np.ndarray

    @classmethod
    def from_view(cls, view: DiDView) -> "DiDPrefixSums":
        order_t = np.argsort(view.deltas_treated, kind="stable")
        order_c = np.argsort(-view.deltas_control, kind="stable")
        ST = np.concatenate([[0.0], np.cumsum(view.deltas_treated[order_t])])
        SC = np.concatenate([[0.0], np.cumsum(view.deltas_control[order_c])])
        return cls(ST, SC, order_t, order_c)


def _witnesses(ps: DiDPrefixSums, N: int, T: int, k: int) -> np.ndarray:
    """Numbers ``l`` of dropped treated individuals for which dropping ``k`` flips the sign."""
    C = N - T
    lo = max(0, k - C + 1)
    hi = min(T - 1, k)
    if lo > hi:
        return np.empty(0, dtype=int)
    ell = np.arange(lo, hi + 1)
    kt = T - ell
    kc = C - (k - ell)
    st = ps.ST[kt]
    total = st + ps.SC[kc]
    # Cross-multiplied form of  st/kt - total/(N-k) <= 0.
    lhs = st * (N - k) - total * kt
    scale = np.abs(st) * (N - k) + np.abs(total) * kt
    return ell[lhs <= _TIE_RTOL * scale]


def did_feasible_at_k(ps: DiDPrefixSums, N: int, T: int, k: int) -> bool:
    """Whether dropping exactly ``k`` individuals (one of each group kept) can flip the sign."""
    if not 0 <= k < N:
        raise ValueError(f"k must lie in [0, {N})")
    return bool(_witnesses(ps, N, T, k).size)


def audit_did(view: DiDView):
    """Exact number of individuals to drop so the interaction coefficient is <= 0."""
    ps = DiDPrefixSums.from_view(view)
    N, T = view.N, view.deltas_treated.size
    if did_feasible_at_k(ps, N, T, 0):
        return 0
    k_max = N - 2
    if k_max <= 0 or not did_feasible_at_k(ps, N, T, k_max):
        return NoFlipPossible()
    lower, upper = 0, k_max
    while upper - lower > 1:
        k = (lower + upper) // 2
        if did_feasible_at_k(ps, N, T, k):
            upper = k
        else:
            lower = k
    return upper


def did_removal_set(view: DiDView, k: int) -> tuple[int, ...]:
    """Individual ids of a size-``k`` removal that flips the interaction sign."""
    ps = DiDPrefixSums.from_view(view)
    N, T = view.N, view.deltas_treated.size
    ell = _witnesses(ps, N, T, k)
    if not ell.size:
        raise ValueError(f"no flipping removal of size {k}")
    l0 = int(ell[0])
    drop_t = view.ids_treated[ps.order_t[T - l0:]]
    drop_c = view.ids_control[ps.order_c[(N - T) - (k - l0):]]
    return tuple(sorted(int(i) for i in np.concatenate([drop_t, drop_c])))


def did_refit_flips(before, after, treated, removed_ids) -> bool:
    """Refit the 4-column regression without ``removed_ids`` and check the oriented interaction.

    Returns ``True`` when both groups keep at least one individual and the
    interaction coefficient, signed by its full-data orientation, is ``<= 0``.
    """
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    mask = _treated_mask(treated, before.size).astype(bool)
    keep = np.ones(before.size, dtype=bool)
    keep[np.asarray(list(removed_ids), dtype=int)] = False
    if not (keep & mask).any() or not (keep & ~mask).any():
        return False
    full = ols_fit(*did_design(before, after, mask))[3]
    s = -1 if full < 0 else 1
    coef = s * ols_fit(*did_design(before[keep], after[keep], mask[keep]))[3]
    scale = float(np.abs(after - before).max())
    return bool(coef <= FLIP_RTOL * abs(full) + FLIP_ATOL * scale)
