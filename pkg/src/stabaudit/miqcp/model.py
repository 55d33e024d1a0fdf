"""The bilinear programs whose optimum is the largest kept set with a flipped sign.

Variables are sample weights ``w`` (one per row) and coefficients ``beta``
(one per column).  The weighted normal equations

    sum_i w_i X_ij' (sum_j X_ij beta_j - y_i) = 0        for every column j'

are bilinear in ``(w, beta)``.  The audited coefficient is moved to the last
column and the response is oriented so that it is positive on the full data.

* **fractional** mode: ``w`` in ``[0, 1]`` and the audited coefficient is fixed
  at zero, so it drops out of the residual.
* **integral** mode: ``w`` in ``{0, 1}`` and the audited coefficient is an
  explicit variable constrained by ``beta_d <= 0``.

The objective in both modes is to maximise ``sum_i w_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..data import Dataset

Mode = Literal["fractional", "integral"]


def default_beta_box(ds: Dataset) -> float:
    """``1e3 * max(1, |beta_full|_inf)``: the coefficient box used when none is given."""
    return 1e3 * max(1.0, float(np.abs(ds.beta_full).max(initial=0.0)))


@dataclass(frozen=True, eq=False)
class BilinearModel:
    """A bilinear weight/coefficient program built from a dataset.

    Attributes
    ----------
    X, y : ndarray
        Design with the audited column moved last, and the oriented response.
    mode : {"fractional", "integral"}
    B : float
        Every coefficient lies in ``[-B, B]``.
    safeguard : bool
        Adds ``sum_i w_i >= 1``, ruling out the trivial all-zero weighting.
    perm : ndarray
        ``X[:, k] == dataset.X[:, perm[k]]``.
    orientation : int
        Sign applied to the source response.
    """

    X: np.ndarray
    y: np.ndarray
    mode: Mode
    B: float
    safeguard: bool
    perm: np.ndarray
    orientation: int
    dataset: Dataset | None = None

    def __post_init__(self):
        if self.mode not in ("fractional", "integral"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (np.isfinite(self.B) and self.B > 0):
            raise ValueError("B must be positive and finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def p(self) -> int:
        """Number of coefficients that appear in the residual."""
        return self.d if self.mode == "integral" else self.d - 1

    @property
    def n_vars(self) -> int:
        return self.n + self.d + self.n * self.p

    def w_index(self, i: int) -> int:
        return i

    def beta_index(self, j: int) -> int:
        return self.n + j

    def z_index(self, i: int, j: int) -> int:
        """Index of the auxiliary variable standing in for ``w_i * beta_j``."""
        return self.n + self.d + i * self.p + j

    # -- structure ---------------------------------------------------------

    def beta_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.d, -self.B)
        hi = np.full(self.d, self.B)
        if self.mode == "fractional":
            lo[-1] = hi[-1] = 0.0
        else:
            hi[-1] = 0.0  # implied by the sign row; tightens the envelopes
        return lo, hi

    def stationarity(self) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients of the normal equations, linear in ``(w, z)``.

        Returns ``(Cw, Cz)`` with ``Cw[j', i] = -X_ij' y_i`` and
        ``Cz[j', i, j] = X_ij' X_ij`` for the ``p`` residual coefficients.
        """
        X, y = self.X, self.y
        Cw = -(X * y[:, None]).T
        Cz = np.einsum("ik,ij->kij", X, X[:, : self.p])
        return Cw, Cz

    def stationarity_matrix(self) -> np.ndarray:
        """The ``d`` stationarity rows over the full variable vector (right-hand side 0)."""
        Cw, Cz = self.stationarity()
        A = np.zeros((self.d, self.n_vars))
        A[:, : self.n] = Cw
        A[:, self.n + self.d:] = Cz.reshape(self.d, -1)
        return A

    def linear_rows(self) -> list[tuple[str, np.ndarray, float]]:
        """Extra ``row . x <= rhs`` constraints: the sign row and the safeguard."""
        rows = []
        if self.mode == "integral":
            r = np.zeros(self.n_vars)
            r[self.beta_index(self.d - 1)] = 1.0
            rows.append(("SIGN", r, 0.0))
        if self.safeguard:
            r = np.zeros(self.n_vars)
            r[: self.n] = -1.0
            rows.append(("SAFE", r, -1.0))
        return rows

    def objective(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        c[: self.n] = 1.0
        return c

    def variable_names(self) -> list[str]:
        names = [f"W{i:07d}" for i in range(self.n)]
        names += [f"B{j:07d}" for j in range(self.d)]
        return names

    def residual(self, w, beta) -> np.ndarray:
        """Stationarity residuals of a point ``(w, beta)``; zero when feasible."""
        w, beta = np.asarray(w, float), np.asarray(beta, float)
        b = beta.copy()
        if self.mode == "fractional":
            b[-1] = 0.0
        r = self.X @ b - self.y
        return self.X.T @ (w * r)

    def to_source_beta(self, beta) -> np.ndarray:
        """Map coefficients back to the dataset's column order and sign."""
        out = np.empty(self.d)
        out[self.perm] = np.asarray(beta, float)
        return self.orientation * out


def build_model(ds: Dataset, mode: Mode = "integral", B: float | None = None,
                safeguard: bool = False) -> BilinearModel:
    """Build the bilinear program for ``ds``; ``B`` defaults to :func:`default_beta_box`."""
    if B is None:
        B = default_beta_box(ds)
    perm = np.array([j for j in range(ds.d) if j != ds.target] + [ds.target])
    s = ds.orientation
    X = np.asarray(ds.X)[:, perm]
    y = s * np.asarray(ds.y)
    return BilinearModel(X, y, mode, float(B), bool(safeguard), perm, s, ds)
