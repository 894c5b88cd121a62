"""scikit-learn style wrapper around the Cauchy solver."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .cauchy import CauchyProblem, N_STEPS, solve
from .flux import FluxPair


class MixedFluxSolver(BaseEstimator):
    """Solve once in :meth:`fit`, then evaluate ``u`` / ``theta`` at ``(t, x)`` rows.

    Hyperparameters follow the estimator conventions so the solver can be
    cloned and swept with ``get_params`` / ``set_params``.

    >>> from gradflux import PiecewiseMonotoneProfile, ThetaField
    >>> est = MixedFluxSolver(horizon=1.0)
    >>> est.fit(PiecewiseMonotoneProfile.constant(0.0), ThetaField(1, (0.0,)))  # doctest: +ELLIPSIS
    MixedFluxSolver(...)
    >>> float(est.predict([[1.0, 0.5]])[0])
    0.5
    """

    def __init__(self, gap=1.0, horizon=1.0, n_steps=N_STEPS, tolerance=1e-12, pair=None):
        self.gap = gap
        self.horizon = horizon
        self.n_steps = n_steps
        self.tolerance = tolerance
        self.pair = pair

    def fit(self, u, theta, interfaces=None):
        pair = self.pair if self.pair is not None else FluxPair.quadratic(self.gap)
        problem = CauchyProblem(pair, u, theta, interfaces=interfaces, horizon=self.horizon,
                                n_steps=self.n_steps, rtol=self.tolerance)
        self.timeline_ = solve(problem)
        self.n_restarts_ = len(self.timeline_.restart_log)
        return self

    def _rows(self, X):
        check_is_fitted(self, "timeline_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise ValueError("X must have columns (t, x)")
        return X

    def _eval(self, X, what):
        X = self._rows(X)
        out = np.empty(len(X), dtype=float if what == "query" else int)
        for t in np.unique(X[:, 0]):
            m = X[:, 0] == t
            out[m] = getattr(self.timeline_, what)(float(t), X[m, 1])
        return out

    def predict(self, X):
        """``u(t, x+)`` for each row ``(t, x)``."""
        return self._eval(X, "query")

    def predict_theta(self, X):
        return self._eval(X, "theta")

    def interface_positions(self, t):
        check_is_fitted(self, "timeline_")
        return self.timeline_.interface_positions(t)
