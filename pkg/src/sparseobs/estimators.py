"""scikit-learn estimator wrappers around the solvers and the pruner.

``SparseRecovery`` is a regressor: fit recovers a k-sparse coefficient
vector from (X, y), predict applies it.  ``GreedyHessianPruner`` is a
transformer over weight matrices: fit accumulates the calibration Gram,
transform prunes each row to the budget with second-order compensation.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from . import solvers
from .objectives import LeastSquaresObjective
from .pruner import LayerProblem, prune_layer


class SparseRecovery(RegressorMixin, BaseEstimator):
    """Sparse linear regression via hard-thresholded first/second order steps.

    Parameters
    ----------
    method : one of "iht", "topk-iobs", "exact-iobs", "stoch-iobs"
    k : sparsity budget; None keeps d // 2 coefficients
    max_iters, eta, damp, stoch_lambda, batch_size, tol, seed :
        forwarded to the solver configuration; eta="auto" uses the inverse
        largest Hessian eigenvalue.
    """

    def __init__(self, method="topk-iobs", k=None, max_iters=100, eta="auto",
                 damp=0.0, stoch_lambda=1.0, batch_size=32, tol=0.0, seed=0):
        self.method = method
        self.k = k
        self.max_iters = max_iters
        self.eta = eta
        self.damp = damp
        self.stoch_lambda = stoch_lambda
        self.batch_size = batch_size
        self.tol = tol
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        obj = LeastSquaresObjective(X, y)
        k = self.k if self.k is not None else max(1, obj.d // 2)
        cfg = solvers.SolverConfig(
            k=k, max_iters=self.max_iters, eta=self.eta, damp=self.damp,
            stoch_lambda=self.stoch_lambda,
            batch_size=min(self.batch_size, obj.n),
            tol=self.tol, seed=self.seed,
        )
        state = solvers.run(obj, self.method, np.zeros(obj.d), cfg)
        self.coef_ = state.theta
        self.state_ = state
        self.n_iter_ = state.t
        self.n_features_in_ = obj.d
        return self

    def predict(self, X):
        if not hasattr(self, "coef_"):
            raise NotFittedError("call fit before predict")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_


class GreedyHessianPruner(TransformerMixin, BaseEstimator):
    """Row-wise greedy weight pruning against a calibration Gram matrix.

    fit(X) ingests calibration activations (n_samples, d_in); transform(W)
    prunes each row of a (n_units, d_in) weight matrix to ``k_row`` nonzeros.

    Parameters
    ----------
    k_row : kept weights per row; None keeps half of d_in
    damp : diagonal dampening; None uses 0.01 x mean Gram diagonal
    """

    def __init__(self, k_row=None, damp=None):
        self.k_row = k_row
        self.damp = damp

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.gram_ = 2.0 * (X.T @ X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, W):
        if not hasattr(self, "gram_"):
            raise NotFittedError("call fit with calibration activations first")
        W = check_array(W, dtype=np.float64)
        k_row = self.k_row if self.k_row is not None else max(1, W.shape[1] // 2)
        problem = LayerProblem(weights=W, gram=self.gram_, k_row=k_row, damp=self.damp)
        pruned, losses = prune_layer(problem)
        self.reconstruction_losses_ = losses
        return pruned
