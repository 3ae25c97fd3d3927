"""scikit-learn style wrappers around the functional API.

Hyperparameters go to ``__init__`` and are stored unchanged; ``fit`` does
the work and sets trailing-underscore attributes. The wrappers are thin:
every computation lives in :mod:`fiber`, :mod:`discretize` and
:mod:`solvers`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .discretize import DiscreteFunction, make_mesh
from .fiber import FiberClass, FiberInput, ProblemParams, classify_fiber
from .solvers import extremal_lambda, extremal_lambda0, nehari_minus_multistart


class _ParamsMixin:
    def _params(self) -> ProblemParams:
        return ProblemParams(self.N, self.a, self.b, self.lam, self.p)

    def _mesh(self):
        return make_mesh(self.N, self.mesh_size, self.grading)


class FunctionalTransformer(_ParamsMixin, TransformerMixin, BaseEstimator):
    """Map nodal values to the columns ``A, C, P, Q2``.

    ``X`` has one row per grid function sampled on the mesh described by
    ``(N, mesh_size, grading)``; its last column (the boundary node) is
    ignored and treated as zero.
    """

    def __init__(self, N=5, p=3.0, mesh_size=256, grading="uniform"):
        self.N = N
        self.p = p
        self.mesh_size = mesh_size
        self.grading = grading

    def fit(self, X=None, y=None):
        self.mesh_ = make_mesh(self.N, self.mesh_size, self.grading)
        self.n_features_in_ = self.mesh_.M + 1
        return self

    def transform(self, X):
        check_is_fitted(self, "mesh_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} nodal values per row, got {X.shape[1]}")
        prm = ProblemParams(self.N, 1.0, 0.0, 0.0, self.p)
        out = np.empty((X.shape[0], 4))
        for i, row in enumerate(X):
            u = DiscreteFunction(self.mesh_, row)
            out[i] = (u.grad_sq, u.lp(prm.crit), u.lp(self.p), u.lp(2.0))
        return out


class FiberClassifier(_ParamsMixin, ClassifierMixin, BaseEstimator):
    """Label rows ``(A, C, P)`` with the class of their fiber map.

    Nothing is learned; ``fit`` only records the label set so the estimator
    composes with scikit-learn tooling.
    """

    def __init__(self, N=5, a=1.0, b=0.0, lam=0.0, p=3.0):
        self.N = N
        self.a = a
        self.b = b
        self.lam = lam
        self.p = p

    def fit(self, X=None, y=None):
        self._params()
        self.classes_ = np.array([c.value for c in FiberClass])
        return self

    def predict(self, X):
        check_is_fitted(self, "classes_")
        prm = self._params()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([classify_fiber(FiberInput(A, C, P, prm)).fiber_class.value for A, C, P in X[:, :3]])


class NehariMinimizer(_ParamsMixin, BaseEstimator):
    """Estimate the N^- level ``c^-(a, b, lam)`` on a radial mesh."""

    def __init__(self, N=5, a=1.0, b=0.0, lam=0.0, p=3.0, mesh_size=256, grading="uniform", n_starts=8, seed=0):
        self.N = N
        self.a = a
        self.b = b
        self.lam = lam
        self.p = p
        self.mesh_size = mesh_size
        self.grading = grading
        self.n_starts = n_starts
        self.seed = seed

    def fit(self, X=None, y=None):
        res = nehari_minus_multistart(self._params(), self._mesh(), self.n_starts, self.seed)
        self.result_ = res
        self.level_ = res.level
        self.minimizer_ = res.minimizer
        self.converged_ = res.converged
        return self


class ExtremalLambdaEstimator(_ParamsMixin, BaseEstimator):
    """Upper bound on ``lambda_0^*`` (``which="lambda0"``) or ``lambda^*`` (``which="lambda"``)."""

    def __init__(self, which="lambda0", N=5, a=1.0, b=0.0, p=3.0, mesh_size=256, grading="uniform", n_starts=8, seed=0):
        self.which = which
        self.N = N
        self.a = a
        self.b = b
        self.p = p
        self.mesh_size = mesh_size
        self.grading = grading
        self.n_starts = n_starts
        self.seed = seed

    lam = 0.0

    def fit(self, X=None, y=None):
        search = {"lambda0": extremal_lambda0, "lambda": extremal_lambda}.get(self.which)
        if search is None:
            raise ValueError(f"which must be 'lambda0' or 'lambda', got {self.which!r}")
        res = search(self._params(), self._mesh(), self.n_starts, self.seed)
        self.result_ = res
        self.upper_bound_ = res.value
        self.direction_ = res.direction
        return self
