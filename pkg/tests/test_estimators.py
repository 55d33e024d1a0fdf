import numpy as np
import pytest
from sklearn.base import clone

from stabaudit import estimators
from stabaudit.estimators import (ExactBinaryAuditor, ExactDiDAuditor, InfluenceAuditor, MIQCPAuditor,
                                  OracleAuditor, SpectralAuditor)

from conftest import random_did


@pytest.fixture
def xy(rng):
    X = rng.standard_normal((10, 2))
    return X, 0.8 * X[:, 0] + rng.standard_normal(10)


@pytest.mark.parametrize("cls", [InfluenceAuditor, SpectralAuditor, MIQCPAuditor, OracleAuditor])
def test_params_round_trip(cls):
    est = cls(target=1)
    params = est.get_params()
    assert params["target"] == 1
    other = clone(est)
    assert other.get_params() == params
    assert other.set_params(target=0).target == 0


def test_bounds_sandwich(xy):
    X, y = xy
    truth = OracleAuditor().fit(X, y)
    lower = SpectralAuditor().fit(X, y).stability_lower_
    miqcp = MIQCPAuditor(time_limit=60).fit(X, y)
    greedy = InfluenceAuditor().fit(X, y)
    assert lower <= truth.stability_ == miqcp.stability_lower_
    assert miqcp.certificate_.value == truth.stability_
    assert greedy.stability_upper_ >= truth.stability_
    assert truth.beta_full_.shape == (2,) and truth.n_features_in_ == 2


def test_amip_method(xy):
    est = InfluenceAuditor(method="amip").fit(*xy)
    if est.certificate_ is None:
        assert est.stability_upper_ is None
    else:
        assert est.certificate_.method == "amip" and est.stability_upper_ == est.certificate_.value
    X = np.array([[0.0], [0.0], [0.0], [1.0], [1.0], [1.0]])
    flat = InfluenceAuditor(method="amip").fit(X, [1.0, 2.0, 3.0, 0.0, 4.0, 5.0])
    assert flat.stability_upper_ >= 1
    with pytest.raises(ValueError):
        InfluenceAuditor(method="bogus").fit(*xy)


def test_target_out_of_range(xy):
    with pytest.raises(ValueError):
        SpectralAuditor(target=5).fit(*xy)


def test_oracle_no_flip():
    X = np.array([[0.0], [0.0], [0.0], [1.0], [1.0], [1.0]])
    est = OracleAuditor(max_k=3).fit(X, X[:, 0])
    assert est.stability_ is None and est.no_flip_within_ == 3


def test_exact_binary():
    X = np.array([[0.0]] * 3 + [[1.0]] * 3)
    est = ExactBinaryAuditor().fit(X, [1.0, 2.0, 3.0, 0.0, 4.0, 5.0])
    assert est.stability_ == 1 and est.removal_set_ == (5,)
    with pytest.raises(ValueError):
        ExactBinaryAuditor().fit(np.ones((4, 2)), np.ones(4))


def test_exact_did(rng):
    before, after, treated = random_did(rng, 12)
    est = ExactDiDAuditor().fit(np.c_[before, after], treated.astype(float))
    assert est.stability_ is None or len(est.removal_set_) == est.stability_
    with pytest.raises(ValueError):
        ExactDiDAuditor().fit(np.c_[before, after], np.full(12, 2.0))


def test_docstring_example():
    import doctest
    assert doctest.testmod(estimators).failed == 0
