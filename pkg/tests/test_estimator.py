import numpy as np
import pytest
from sklearn.base import clone

from stopping_predictor import StoppingTimePredictor
from stopping_predictor.core import ParameterError, PendingError, TargetFunction
from stopping_predictor.predictor import OnlinePredictor
from stopping_predictor.processes import ProcessSpec, generate

M1 = ProcessSpec.markov([[0.9, 0.1], [0.2, 0.8]], order=1, seed=6)


def test_params_round_trip():
    est = StoppingTimePredictor(beta=0.2, schedule="log")
    assert est.get_params()["beta"] == 0.2
    est.set_params(gamma=0.1)
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert not hasattr(c, "predictor_")


def test_fit_matches_online_predictor():
    x = generate(M1, 3000)
    est = StoppingTimePredictor().fit(x)
    ref = OnlinePredictor()
    ref.feed(x.tolist())
    assert est.lambdas_.tolist() == ref.lambdas
    assert est.n_events_ == len(ref.lambdas) - 1
    proba = est.predict_proba()
    assert proba.sum() == pytest.approx(1.0)
    assert proba.tolist() == [ref.estimate().proba(0), ref.estimate().proba(1)]


def test_partial_fit_equals_fit():
    x = generate(M1, 2000)
    a = StoppingTimePredictor().fit(x)
    b = StoppingTimePredictor()
    for chunk in np.array_split(x, 7):
        b.partial_fit(chunk)
    assert np.array_equal(a.lambdas_, b.lambdas_)
    assert np.array_equal(a.predict_proba(), b.predict_proba())


def test_string_labels():
    text = list("ab" * 200)
    est = StoppingTimePredictor().fit(text)
    assert list(est.classes_) == ["a", "b"]
    assert est.predict() in ("a", "b")
    with pytest.raises(ValueError):
        StoppingTimePredictor().fit(np.zeros((5, 2)))


def test_column_vector_accepted():
    x = generate(M1, 500)
    a = StoppingTimePredictor().fit(x)
    b = StoppingTimePredictor().fit(x.reshape(-1, 1))
    assert np.array_equal(a.lambdas_, b.lambdas_)


def test_pending_and_invalid():
    with pytest.raises(PendingError):
        StoppingTimePredictor().fit([0]).predict_proba()
    with pytest.raises(ParameterError):
        StoppingTimePredictor(beta=0.6).fit([0, 1, 0])


def test_predict_value_with_target():
    est = StoppingTimePredictor(target=TargetFunction(float, bound=1.0, name="identity"))
    est.fit(generate(M1, 2000))
    assert est.predict_value() == pytest.approx(est.predict_proba()[1])
    with pytest.raises(ParameterError):
        StoppingTimePredictor().fit([0, 0, 0]).predict_value()
