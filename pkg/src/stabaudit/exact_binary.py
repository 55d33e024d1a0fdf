"""Exact Stability for a single binary treatment regressed with an intercept.

With a 0/1 regressor the OLS slope is the difference of group means, so for a
fixed number of removals the most damaging choice keeps the largest control
responses and the smallest treated responses.  Feasibility is monotone in the
number of removals, so a binary search over it finds the exact minimum in
``O(n log n)`` time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import NoFlipPossible
from .data import BinaryTreatmentView

_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrefixSums:
    """Prefix sums of controls sorted decreasing (``S0``) and treated sorted increasing (``S1``).

    ``S0[l]`` is the sum of the ``l`` largest controls; ``S0[0] == 0``.
    """

    S0: np.ndarray
    S1: np.ndarray
    order0: np.ndarray
    order1: np.ndarray

    @classmethod
    def from_view(cls, view: BinaryTreatmentView) -> "PrefixSums":
        # Stable sorts: ties broken by position, which fixes the certificate.
        order0 = np.argsort(-view.y0, kind="stable")
        order1 = np.argsort(view.y1, kind="stable")
        S0 = np.concatenate([[0.0], np.cumsum(view.y0[order0])])
        S1 = np.concatenate([[0.0], np.cumsum(view.y1[order1])])
        return cls(S0, S1, order0, order1)

    @property
    def n0(self) -> int:
        return self.S0.size - 1

    @property
    def n1(self) -> int:
        return self.S1.size - 1


def _witnesses(ps: PrefixSums, n: int, k: int) -> np.ndarray:
    """Numbers of kept controls ``l`` for which keeping ``n - k`` samples flips the slope."""
    kept = n - k
    lo = max(1, kept - ps.n1)
    hi = min(ps.n0, kept - 1)
    if lo > hi:
        return np.empty(0, dtype=int)
    ell = np.arange(lo, hi + 1)
    m = kept - ell
    lhs = -m * ps.S0[ell] + ell * ps.S1[m]
    scale = m * np.abs(ps.S0[ell]) + ell * np.abs(ps.S1[m])
    return ell[lhs <= _TIE_RTOL * scale]


def feasible_at_k(ps: PrefixSums, n: int, k: int) -> bool:
    """Whether some removal of exactly ``k`` samples leaves an oriented slope <= 0.

    Both kept groups must be nonempty; a slope with one group missing is undefined.
    """
    if not 0 <= k < n:
        raise ValueError(f"k must lie in [0, {n})")
    return bool(_witnesses(ps, n, k).size)


def audit_binary(view: BinaryTreatmentView):
    """Exact Stability of the treatment coefficient, or :class:`NoFlipPossible`."""
    ps = PrefixSums.from_view(view)
    n = view.n
    if feasible_at_k(ps, n, 0):
        return 0
    k_max = n - 2
    if k_max <= 0 or not feasible_at_k(ps, n, k_max):
        return NoFlipPossible()
    lower, upper = 0, k_max  # lower infeasible, upper feasible
    while upper - lower > 1:
        k = (lower + upper) // 2
        if feasible_at_k(ps, n, k):
            upper = k
        else:
            lower = k
    return upper


def binary_removal_set(view: BinaryTreatmentView, k: int) -> tuple[int, ...]:
    """Rows (source indices) of a size-``k`` removal set that flips the slope.

    Uses the smallest witnessing number of kept controls.
    """
    ps = PrefixSums.from_view(view)
    n = view.n
    ell = _witnesses(ps, n, k)
    if not ell.size:
        raise ValueError(f"no flipping removal of size {k}")
    l0 = int(ell[0])
    m = n - k - l0
    drop0 = view.idx0[ps.order0[l0:]]
    drop1 = view.idx1[ps.order1[m:]]
    return tuple(sorted(int(i) for i in np.concatenate([drop0, drop1])))
