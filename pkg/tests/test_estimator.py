import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gradflux import PiecewiseMonotoneProfile, ThetaField
from gradflux.estimator import MixedFluxSolver


def fitted(**kw):
    u = PiecewiseMonotoneProfile.riemann(0.0, 2.0, 0.0)
    return MixedFluxSolver(**kw).fit(u, ThetaField(1, (0.0,)))


def test_params_round_trip_through_clone():
    est = MixedFluxSolver(gap=2.0, horizon=3.0, n_steps=64)
    params = clone(est).get_params()
    assert params["gap"] == 2.0 and params["horizon"] == 3.0 and params["n_steps"] == 64
    assert est.set_params(gap=0.5).gap == 0.5


def test_predict_follows_the_golden_shock():
    est = fitted()
    X = np.array([[1.0, 1.4], [1.0, 1.6], [2.0, 2.9], [2.0, 3.1]])
    assert np.array_equal(est.predict(X), [2.0, 0.0, 2.0, 0.0])
    assert np.array_equal(est.predict_theta(X), [1, 0, 1, 0])
    assert est.interface_positions(1.0) == pytest.approx([1.5], abs=1e-12)
    assert est.n_restarts_ == 0


def test_gap_changes_the_speed():
    # chord speed (f(2) - g(0)) / 2 = 1 + gap / 2
    est = fitted(gap=2.0)
    assert est.interface_positions(1.0) == pytest.approx([2.0], abs=1e-12)


def test_unfitted_and_bad_shapes():
    with pytest.raises(NotFittedError):
        MixedFluxSolver().predict([[1.0, 0.0]])
    with pytest.raises(ValueError):
        fitted().predict([[1.0, 0.0, 2.0]])
