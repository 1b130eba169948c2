"""Scikit-learn style wrappers around the functional core.

SparsityOrderEstimator treats threshold calibration as fitting and
order estimation as prediction; OmpDecoder mirrors sklearn's linear
sparse decoders (fit(X, y) learns coef_, predict applies it). Both
inherit BaseEstimator, so get_params/set_params/clone work as usual.
The numeric kernels stay plain functions; these classes only manage
state and validation.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .recovery import omp
from .soe import (
    blocking_params,
    calibrate_thresholds,
    estimate_order,
    extract_blocks,
)
from .validation import as_complex_matrix, as_complex_vector


class SparsityOrderEstimator(BaseEstimator):
    """Estimate the sparsity order of signals from measurement vectors.

    Parameters
    ----------
    p : int, default 0
        Block advance; 0 picks abutting blocks from the factorization
        of the measurement length, >= 1 overlaps blocks by ell - p.
    noise_variance : float, default 1.0
        Per-entry complex noise variance the thresholds are tuned for.
    pfa : float, default 0.005
        Target false-rejection rate of the calibrated rank test.
    calibration_trials : int, default 2000
        Monte-Carlo trials for threshold calibration.
    random_state : int, default 0
        Seed of the calibration RNG.

    fit(X) infers the measurement length from X's columns and builds
    the calibration; predict(X) returns one estimated order per row.
    """

    def __init__(
        self,
        p: int = 0,
        noise_variance: float = 1.0,
        pfa: float = 0.005,
        calibration_trials: int = 2000,
        random_state: int = 0,
    ):
        self.p = p
        self.noise_variance = noise_variance
        self.pfa = pfa
        self.calibration_trials = calibration_trials
        self.random_state = random_state

    def fit(self, X, y=None):
        X = as_complex_matrix(X, "X")
        m = X.shape[1]
        self.scheme_ = blocking_params(m, self.p)
        self.calibration_ = calibrate_thresholds(
            self.scheme_.ell,
            self.scheme_.k,
            self.noise_variance,
            self.pfa,
            self.calibration_trials,
            self.random_state,
            p=self.scheme_.p,
        )
        self.n_features_in_ = m
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "calibration_")
        X = as_complex_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, fit saw {self.n_features_in_}"
            )
        return np.array(
            [
                estimate_order(extract_blocks(row, self.scheme_), self.calibration_)
                for row in X
            ],
            dtype=np.int64,
        )


class OmpDecoder(BaseEstimator):
    """Sparse decoding of one measurement against a unit-norm dictionary.

    fit(X, y) runs orthogonal matching pursuit of y on the columns of
    X, exposing coef_ (dense solution), support_, n_iter_, and
    residual_norm_. predict(X) applies the learned coefficients.

    Parameters
    ----------
    n_nonzero_coefs : int or None, default None
        OMP step count; None uses 10% of the column count (at least 1),
        capped at the matrix's recoverable maximum.
    residual_tol : float or None, default None
        Optional early stop once the residual norm falls to this value.
    """

    def __init__(self, n_nonzero_coefs: int | None = None, residual_tol: float | None = None):
        self.n_nonzero_coefs = n_nonzero_coefs
        self.residual_tol = residual_tol

    def fit(self, X, y):
        X = as_complex_matrix(X, "X")
        y = as_complex_vector(y, "y")
        m, n = X.shape
        if self.n_nonzero_coefs is None:
            steps = max(1, n // 10)
        else:
            steps = int(self.n_nonzero_coefs)
        steps = min(steps, m, n)
        result = omp(X, y, steps, residual_tol=self.residual_tol)
        self.coef_ = result.estimate.dense()
        self.support_ = result.estimate.support.copy()
        self.n_iter_ = result.iterations
        self.residual_norm_ = result.residual_norm
        self.n_features_in_ = n
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = as_complex_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, fit saw {self.n_features_in_}"
            )
        return X @ self.coef_
