"""scikit-learn style transformers mapping initial opinions to stable opinions.

Rows of ``X`` are initial-opinion vectors ``x(0)`` of length ``n``. ``fit``
learns a linear operator ``T`` (``n x n``) and ``transform`` returns
``X @ T.T``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dynamics import OpinionConfig, influence_entries
from .meanfield import MeanFieldSystem
from .montecarlo import MonteCarlo, _mc_reduce, _sample_influence
from .rand_graph import ErModel, iter_enumeration


def _opinion_config(alpha, alpha_bar, n) -> OpinionConfig:
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (n,)).copy()
    bar = float(a.max()) if alpha_bar is None else float(alpha_bar)
    return OpinionConfig(a, bar, np.zeros(n))


class _OpinionTransformer(TransformerMixin, BaseEstimator):
    def _validate_fit(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] < 2:
            raise ValueError("need at least two agents (columns)")
        if np.any(X < 0) or np.any(X > 1):
            raise ValueError("initial opinions must lie in [0, 1]")
        self.n_features_in_ = X.shape[1]
        return X

    def transform(self, X):
        check_is_fitted(self, "operator_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return X @ self.operator_.T


class MeanFieldOpinion(_OpinionTransformer):
    """Stable opinion of the mean-field dynamics, ``(I - E(H))^{-1} B x(0)``."""

    def __init__(self, p=0.5, directed=False, alpha=0.5, alpha_bar=None):
        self.p = p
        self.directed = directed
        self.alpha = alpha
        self.alpha_bar = alpha_bar

    def fit(self, X, y=None):
        X = self._validate_fit(X)
        n = X.shape[1]
        model = ErModel(n, self.p, self.directed)
        system = MeanFieldSystem.from_model(model, _opinion_config(self.alpha, self.alpha_bar, n))
        self.expected_influence_ = system.expected_influence
        self.operator_ = system.operator()
        return self


class ExpectedStableOpinion(_OpinionTransformer):
    """Expected stable opinion over the random graph, ``E((I - H)^{-1}) B x(0)``.

    With ``samples=None`` the expectation is exact (enumeration, tiny ``n``
    only); otherwise it is a Monte Carlo average over ``samples`` graphs
    seeded by ``random_state``.
    """

    def __init__(self, p=0.5, directed=False, alpha=0.5, alpha_bar=None, samples=None, random_state=0):
        self.p = p
        self.directed = directed
        self.alpha = alpha
        self.alpha_bar = alpha_bar
        self.samples = samples
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._validate_fit(X)
        n = X.shape[1]
        model = ErModel(n, self.p, self.directed)
        cfg = _opinion_config(self.alpha, self.alpha_bar, n)
        eye = np.eye(n)
        if self.samples is None:
            R = np.zeros((n, n))
            for adj, probs in iter_enumeration(model):
                inv = np.linalg.inv(eye - influence_entries(adj, cfg.alpha))
                R += np.einsum("g,gij->ij", probs, inv)
        else:
            est = MonteCarlo(int(self.samples), master_seed=int(self.random_state))

            def kernel(seed):
                H = _sample_influence(model, cfg, seed, dense=True)
                return np.linalg.inv(eye - H)

            R = _mc_reduce(kernel, est)
        self.expected_resolvent_ = R
        self.operator_ = R * cfg.stubbornness[None, :]
        return self
