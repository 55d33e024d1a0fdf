"""Certificates on Stability and the refit check that backs every upper bound."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .data import Dataset
from .linalg import coefficient_identified, ols_fit

BoundType = Literal["lower", "upper", "exact"]


@dataclass(frozen=True)
class NoFlipWithin:
    """No removal set of size at most ``max_k`` flips the sign."""

    max_k: int


@dataclass(frozen=True)
class NoFlipPossible:
    """No removal set that keeps the target identified flips the sign."""


@dataclass(frozen=True)
class NoFlipFound:
    """A heuristic gave up without finding a flipping set (says nothing about Stability)."""

    method: str


@dataclass(frozen=True)
class StabilityCertificate:
    """A bound on Stability produced by one method.

    Upper and exact bounds carry the explicit removal set; ``verified`` records
    whether refitting OLS without those rows drove the oriented target
    coefficient to zero or below.
    """

    method: str
    bound_type: BoundType
    value: int
    removed: tuple[int, ...] = ()
    verified: bool = False
    qualifiers: tuple[str, ...] = ()
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("certificate value must be nonnegative")
        if self.bound_type in ("upper", "exact") and len(self.removed) != self.value:
            raise ValueError("removal set size must equal the certified value")


def oriented_refit(ds: Dataset, removed=()) -> float | None:
    """Oriented target coefficient after dropping ``removed``; ``None`` if unidentified."""
    keep = ds.keep_mask(removed)
    Xk, yk = ds.X[keep], ds.y[keep]
    if not coefficient_identified(Xk, ds.target):
        return None
    return ds.orientation * float(ols_fit(Xk, yk)[ds.target])


def is_flipped(ds: Dataset, removed=()) -> bool:
    coef = oriented_refit(ds, removed)
    return coef is not None and coef <= ds.flip_tolerance


def upper_certificate(ds: Dataset, method: str, removed, bound_type: BoundType = "upper",
                      qualifiers=(), **details) -> StabilityCertificate:
    """Verify ``removed`` by refitting and wrap it as a certificate.

    Raises ``ValueError`` if the refit does not flip the sign: an unverified
    removal set is never turned into a certificate.
    """
    removed = tuple(sorted(int(i) for i in np.asarray(list(removed), dtype=int)))
    if not is_flipped(ds, removed):
        raise ValueError(f"{method}: removal set of size {len(removed)} does not flip the sign")
    return StabilityCertificate(method, bound_type, len(removed), removed, True, tuple(qualifiers),
                                dict(details))
