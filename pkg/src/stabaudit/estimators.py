"""Scikit-learn style front ends for the auditors.

Each auditor follows the estimator protocol: constructor arguments are plain
hyper-parameters (``get_params`` / ``set_params`` work), ``fit(X, y)``
validates the input and stores its findings in trailing-underscore
attributes.  Auditors do not predict or transform; the fitted attributes are
the product.

>>> import numpy as np
>>> X = np.array([[0.], [0.], [1.], [1.]])
>>> aud = ExactBinaryAuditor().fit(X, np.array([0., 3., 1., 2.5]))
>>> aud.stability_
1
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_X_y

from .certificates import NoFlipPossible, StabilityCertificate
from .data import BinaryTreatmentView, Dataset, did_view
from .exact_binary import audit_binary, binary_removal_set
from .exact_did import audit_did, did_removal_set
from .influence import amip_upper_bound, greedy_resolve_upper_bound
from .miqcp import branch_and_bound, build_model
from .oracle import brute_force_stability
from .spectral import spectral_lower_bound


class _RegressionAuditor(BaseEstimator):
    """Shared input handling: ``X`` columns are regressors, ``target`` indexes the audited one."""

    def _dataset(self, X, y) -> Dataset:
        X, y = check_X_y(X, y, y_numeric=True, ensure_min_samples=2, dtype=float)
        if not 0 <= self.target < X.shape[1]:
            raise ValueError(f"target={self.target} out of range for {X.shape[1]} columns")
        return Dataset.from_arrays(X, y, self.target, intercept=self.fit_intercept)

    def _store(self, ds: Dataset):
        self.n_features_in_ = ds.d - int(self.fit_intercept)
        self.beta_full_ = np.asarray(ds.beta_full)[: self.n_features_in_].copy()
        self.orientation_ = ds.orientation


class InfluenceAuditor(_RegressionAuditor):
    """Upper bound from removing influential samples.

    Parameters
    ----------
    method : {"greedy", "amip"}
        ``greedy`` refits after every removal; ``amip`` ranks once.
    target : int
        Column of ``X`` whose coefficient is audited.
    fit_intercept : bool
        Append a constant column before fitting.

    Attributes
    ----------
    certificate_ : StabilityCertificate or None
    stability_upper_ : int or None
    """

    def __init__(self, method: str = "greedy", target: int = 0, fit_intercept: bool = True):
        self.method = method
        self.target = target
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        if self.method not in ("greedy", "amip"):
            raise ValueError(f"unknown method {self.method!r}")
        ds = self._dataset(X, y)
        self._store(ds)
        fn = greedy_resolve_upper_bound if self.method == "greedy" else amip_upper_bound
        res = fn(ds)
        self.certificate_ = res if isinstance(res, StabilityCertificate) else None
        self.stability_upper_ = None if self.certificate_ is None else self.certificate_.value
        return self


class SpectralAuditor(_RegressionAuditor):
    """Lower bound from the two spectral moment constants.

    Attributes
    ----------
    certificate_ : SpectralCertificate
    stability_lower_ : int
    """

    def __init__(self, target: int = 0, fit_intercept: bool = True):
        self.target = target
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        ds = self._dataset(X, y)
        self._store(ds)
        self.certificate_ = spectral_lower_bound(ds)
        self.stability_lower_ = self.certificate_.lower_bound
        return self


class MIQCPAuditor(_RegressionAuditor):
    """Branch-and-bound on the bilinear weight program.

    Parameters
    ----------
    mode : {"integral", "fractional"}
    beta_box : float or None
        Coefficient box; ``None`` uses ``1e3 * max(1, |beta_full|_inf)``.
    time_limit : float
    node_limit : int or None
    warm_start : bool
        Seed the incumbent with the greedy removal set.

    Attributes
    ----------
    result_ : BnBResult
    stability_lower_ : int
        Valid for coefficient vectors within the box.
    certificate_ : StabilityCertificate or None
        Best verified removal set found.
    """

    def __init__(self, mode: str = "integral", beta_box: float | None = None, time_limit: float = 10.0,
                 node_limit: int | None = None, warm_start: bool = True, safeguard: bool = False,
                 target: int = 0, fit_intercept: bool = True):
        self.mode = mode
        self.beta_box = beta_box
        self.time_limit = time_limit
        self.node_limit = node_limit
        self.warm_start = warm_start
        self.safeguard = safeguard
        self.target = target
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        ds = self._dataset(X, y)
        self._store(ds)
        seed = None
        if self.warm_start:
            g = greedy_resolve_upper_bound(ds)
            seed = g.removed if isinstance(g, StabilityCertificate) else None
        model = build_model(ds, self.mode, self.beta_box, self.safeguard)
        self.result_ = branch_and_bound(model, self.time_limit, self.node_limit, warm_start=seed)
        self.stability_lower_ = self.result_.lower_bound
        self.certificate_ = self.result_.certificate
        return self


class OracleAuditor(_RegressionAuditor):
    """Exhaustive search over removal sets up to ``max_k`` rows (small data only)."""

    def __init__(self, max_k: int | None = None, target: int = 0, fit_intercept: bool = True):
        self.max_k = max_k
        self.target = target
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        ds = self._dataset(X, y)
        self._store(ds)
        max_k = ds.n if self.max_k is None else self.max_k
        res = brute_force_stability(ds, max_k, return_set=True)
        if isinstance(res, tuple):
            self.stability_, self.removal_set_ = res
        else:
            self.stability_, self.removal_set_ = None, None
            self.no_flip_within_ = res.max_k
        return self


class ExactBinaryAuditor(BaseEstimator):
    """Exact Stability of a binary treatment effect (regression on treatment plus intercept).

    ``X`` is a single 0/1 column.

    Attributes
    ----------
    stability_ : int or None
        ``None`` when no removal keeping both groups can flip the sign.
    removal_set_ : tuple of int or None
    """

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True, dtype=float)
        if X.shape[1] != 1:
            raise ValueError("ExactBinaryAuditor expects a single treatment column")
        view = BinaryTreatmentView.from_arrays(X[:, 0], y)
        self.n_features_in_ = 1
        self.orientation_ = view.orientation
        res = audit_binary(view)
        if isinstance(res, NoFlipPossible):
            self.stability_, self.removal_set_ = None, None
        else:
            self.stability_ = int(res)
            self.removal_set_ = binary_removal_set(view, res)
        return self


class ExactDiDAuditor(BaseEstimator):
    """Exact Stability of a two-period difference-in-differences interaction.

    ``X`` has two columns (outcome before, outcome after) with one row per
    individual; ``y`` is the 0/1 treated indicator.  Stability counts
    individuals, each removed together with both of its observations.
    """

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("ExactDiDAuditor expects columns (before, after)")
        treated = check_array(np.asarray(y).reshape(-1, 1), dtype=float)[:, 0]
        if treated.size != X.shape[0] or not np.all((treated == 0) | (treated == 1)):
            raise ValueError("y must be a 0/1 treated indicator with one entry per row")
        view = did_view(X[:, 0], X[:, 1], treated.astype(bool))
        self.n_features_in_ = 2
        self.orientation_ = view.orientation
        res = audit_did(view)
        if isinstance(res, NoFlipPossible):
            self.stability_, self.removal_set_ = None, None
        else:
            self.stability_ = int(res)
            self.removal_set_ = did_removal_set(view, res)
        return self

