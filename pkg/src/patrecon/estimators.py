"""scikit-learn style wrappers around the reconstruction methods.

A reconstructor is configured by its constructor parameters, fitted to one
sinogram and then exposes the image in ``image_``::

    rec = Reconstructor(op, method="cg", max_iter=40).fit(g)
    rec.image_, rec.log_, rec.score(g)
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .metrics import rel_residual
from .solvers import StopRule, cgne, landweber, steepest_descent
from .variational import h1_reconstruct, tv_reconstruct

_METHODS = ("landweber", "sd", "cg", "h1", "tv")


class Reconstructor(BaseEstimator):
    """Recover the initial pressure from boundary data.

    Parameters
    ----------
    operator : PATOperator or MatrixOperator
        Forward map with its adjoint and metrics.
    method : {"landweber", "sd", "cg", "h1", "tv"}
    max_iter : int
    lam : float
        Penalty weight for ``h1`` and ``tv``.
    delta : float, optional
        Noise level; enables discrepancy stopping for the iterative methods.
    tau : float
        Discrepancy safety factor, must exceed 1.
    balance : float
        Gradient-block scaling of the ``tv`` method (0 for plain steps).
    gamma : float, optional
        Landweber step; estimated from the operator norm by default.
    truth : ndarray, optional
        Reference image; fills the error column of ``log_``.
    """

    def __init__(self, operator=None, method="cg", max_iter=40, lam=0.1,
                 delta=None, tau=1.5, gamma=None, balance=1.0, truth=None):
        self.operator = operator
        self.method = method
        self.max_iter = max_iter
        self.lam = lam
        self.delta = delta
        self.tau = tau
        self.gamma = gamma
        self.balance = balance
        self.truth = truth

    def _validate_params(self):
        if self.operator is None:
            raise ValueError("Reconstructor needs an operator")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 0:
            raise ValueError("max_iter must be a nonnegative integer")

    def _check_data(self, g):
        shape = tuple(self.operator.range_shape)
        g = check_array(g, ensure_2d=len(shape) == 2, ensure_all_finite=True,
                        dtype=np.float64, ensure_min_samples=1)
        if g.shape != shape:
            raise ValueError(f"expected data of shape {shape}, got {g.shape}")
        return g

    def fit(self, g, y=None):
        """Reconstruct from the sinogram ``g``; ``y`` is ignored."""
        self._validate_params()
        g = self._check_data(g)
        op = self.operator
        if self.delta is None:
            stop = StopRule.max_iters(int(self.max_iter))
        else:
            stop = StopRule.discrepancy(self.delta, self.tau, int(self.max_iter))
        if self.method == "cg":
            image, log = cgne(op, g, stop, self.truth)
        elif self.method == "sd":
            image, log = steepest_descent(op, g, stop, self.truth)
        elif self.method == "landweber":
            image, log = landweber(op, g, self.gamma, stop, self.truth)
        elif self.method == "h1":
            image, log = h1_reconstruct(op, g, self.lam, stop, self.truth)
        else:
            image, log = tv_reconstruct(op, g, self.lam, int(self.max_iter), self.truth,
                                        balance=self.balance)
        self.image_ = image
        self.log_ = log
        self.n_iter_ = log.iterations
        return self

    def transform(self, g):
        """Reconstructed image for ``g`` (refits on ``g``)."""
        return self.fit(g).image_

    def fit_transform(self, g, y=None):
        return self.fit(g).image_

    def predict(self, f=None):
        """Boundary data of ``f``, or of the fitted image when ``f`` is None."""
        if f is None:
            check_is_fitted(self, "image_")
            f = self.image_
        return self.operator.forward(np.asarray(f, dtype=float))

    def inverse_transform(self, f):
        return self.predict(f)

    def score(self, g, y=None):
        """Negative relative residual of the fitted image on ``g``."""
        check_is_fitted(self, "image_")
        g = self._check_data(g)
        return -rel_residual(self.operator, self.image_, g)
