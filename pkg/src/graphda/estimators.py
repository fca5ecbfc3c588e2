"""Scikit-learn compatible wrappers around the online learners."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .learners import LEARNERS, HyperParams, LearnerState, run_stream

__all__ = ["OnlineSparseClassifier", "OnlineSparseRegressor"]


class _OnlineEstimator(BaseEstimator):
    """Shared fit / partial_fit plumbing; one pass per call, in row order."""

    _loss = "logistic"

    def __init__(self, learner="graphda", graph=None, sparsity=None, gamma=1.0, lam=0.0,
                 rho=0.0, eta=1.0, delta=1.0, alpha=1e-3, components=1, omega=0.1,
                 max_iter=20, use_average=False):
        self.learner = learner
        self.graph = graph
        self.sparsity = sparsity
        self.gamma = gamma
        self.lam = lam
        self.rho = rho
        self.eta = eta
        self.delta = delta
        self.alpha = alpha
        self.components = components
        self.omega = omega
        self.max_iter = max_iter
        self.use_average = use_average

    def _hyper(self) -> HyperParams:
        if self.learner not in LEARNERS:
            raise ValueError(f"unknown learner {self.learner!r}; choose from {LEARNERS}")
        return HyperParams(gamma=self.gamma, lam=self.lam, rho=self.rho, eta=self.eta,
                           delta=self.delta, alpha=self.alpha, sparsity=self.sparsity,
                           components=self.components, omega=self.omega,
                           max_iter=self.max_iter)

    def _encode(self, y):
        return np.asarray(y, dtype=np.float64)

    def _step(self, X, y, state):
        traj = run_stream(self.learner, self._hyper(), X, self._encode(y), self._loss,
                          self.graph, state=state)
        self.state_ = traj.state
        self.coef_ = traj.w
        self.coef_avg_ = traj.w_bar
        self.n_iter_ = traj.state.t
        return self

    def fit(self, X, y):
        """Reset to the zero model and make one pass over ``(X, y)``."""
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=self._loss != "logistic")
        self.n_features_in_ = X.shape[1]
        self._prepare_targets(y, None, reset=True)
        return self._step(X, y, LearnerState.zeros(X.shape[1]))

    def partial_fit(self, X, y, classes=None):
        """Continue the pass from the current state."""
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=self._loss != "logistic")
        first = not hasattr(self, "state_")
        if first:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        self._prepare_targets(y, classes, reset=first)
        state = LearnerState.zeros(X.shape[1]) if first else self.state_
        return self._step(X, y, state)

    def _prepare_targets(self, y, classes, reset):
        pass

    def _weights(self):
        check_is_fitted(self, "coef_")
        return self.coef_avg_ if self.use_average else self.coef_

    def decision_function(self, X):
        X = check_array(X, dtype=np.float64)
        w = self._weights()
        if X.shape[1] != len(w):
            raise ValueError(f"X has {X.shape[1]} features, expected {len(w)}")
        return X @ w


class OnlineSparseClassifier(ClassifierMixin, _OnlineEstimator):
    """Binary classifier trained with logistic loss; ``sign(0)`` predicts the
    first class."""

    _loss = "logistic"

    def _prepare_targets(self, y, classes, reset):
        if reset:
            found = np.unique(y if classes is None else classes)
            if len(found) != 2:
                raise ValueError(f"need exactly two classes, got {len(found)}")
            self.classes_ = found
        elif not np.all(np.isin(y, self.classes_)):
            raise ValueError("y contains labels unseen at the first partial_fit")

    def _encode(self, y):
        return np.where(y == self.classes_[1], 1.0, -1.0)

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


class OnlineSparseRegressor(RegressorMixin, _OnlineEstimator):
    """Linear regressor trained with squared loss."""

    _loss = "least_squares"

    def predict(self, X):
        return self.decision_function(X)
