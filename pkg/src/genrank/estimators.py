"""scikit-learn style wrappers around the core functions."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import InputError
from .kernels import KernelSpec, median_gamma
from .mmd import EmpiricalSample
from .powerlaw import FREE, MmdQuantileCurve, fit_quantile_curve, predict_n_star
from .ranking import ranking_from_scores
from .utils.validation import check_vectors
from .workflow import GenRequirement, assess_study


class RankingTransformer(TransformerMixin, BaseEstimator):
    """Turn rows of scores into rows of tier indices.

    NaN scores are placed together in one tier below the worst observed one.
    """

    def __init__(self, higher_is_better=True, tie_tol=0.0):
        self.higher_is_better = higher_is_better
        self.tie_tol = tie_tol

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise InputError(f"expected a 2-d score matrix, got shape {X.shape}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise InputError(f"expected {self.n_features_in_} columns, got shape {X.shape}")
        out = np.empty(X.shape, dtype=np.int64)
        for i, row in enumerate(X):
            miss = np.isnan(row)
            if miss.all():
                raise InputError(f"row {i} has no observed score")
            r = ranking_from_scores(row[~miss], self.higher_is_better, self.tie_tol)
            out[i, ~miss] = r.ranks
            out[i, miss] = r.n_tiers
        return out


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Fit ``log n = beta1 log q + beta0``; ``X`` holds quantiles, ``y`` sizes.

    ``predict`` returns the real-valued sizes; :meth:`n_star` the smallest
    integer size reaching a threshold.
    """

    def __init__(self, fit_mode=FREE):
        self.fit_mode = fit_mode

    def fit(self, X, y):
        q = np.asarray(X, dtype=float).reshape(len(y), -1)[:, 0]
        n = np.asarray(y)
        order = np.argsort(n)
        curve = MmdQuantileCurve(tuple(zip(n[order].tolist(), q[order].tolist())), alpha=np.nan)
        self.fit_ = fit_quantile_curve(curve, self.fit_mode)
        self.coef_ = np.array([self.fit_.beta1])
        self.intercept_ = self.fit_.beta0
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        q = np.asarray(X, dtype=float).reshape(-1)
        return np.exp(self.coef_[0] * np.log(q) + self.intercept_)

    def n_star(self, eps: float) -> int:
        check_is_fitted(self, "fit_")
        return predict_n_star(self.fit_, eps)


class GeneralizabilityEstimator(BaseEstimator):
    """Estimate how many experiments make a study generalizable.

    ``fit(X)`` takes one ranking (tier indices) per row, or raw scores for
    ``kernel="rbf"``, and sets ``n_star_``, ``generalizable_``, ``curve_``,
    ``power_law_``, ``eps_star_`` and ``kernel_spec_``.
    """

    def __init__(
        self,
        kernel="jaccard",
        nu=None,
        gamma=None,
        topk=1,
        target=0,
        alpha_star=0.95,
        delta_star=0.05,
        n_rep=100,
        mode="subsample",
        fit_mode=FREE,
        random_state=0,
    ):
        self.kernel = kernel
        self.nu = nu
        self.gamma = gamma
        self.topk = topk
        self.target = target
        self.alpha_star = alpha_star
        self.delta_star = delta_star
        self.n_rep = n_rep
        self.mode = mode
        self.fit_mode = fit_mode
        self.random_state = random_state

    def _spec(self, X, n_a):
        if self.kernel == "borda":
            return KernelSpec.borda(n_a, self.target, self.nu)
        if self.kernel == "jaccard":
            return KernelSpec.jaccard(n_a, self.topk)
        if self.kernel == "mallows":
            return KernelSpec.mallows(n_a, self.nu)
        if self.kernel == "rbf":
            return KernelSpec.rbf(n_a, self.gamma if self.gamma is not None else median_gamma(X))
        raise InputError(f"unknown kernel {self.kernel!r}")

    def fit(self, X, y=None):
        if self.kernel == "rbf":
            sample = EmpiricalSample.from_vectors(check_vectors(X))
        else:
            sample = EmpiricalSample.from_rankings(X)
        spec = self._spec(sample.results, sample.n_a)
        req = GenRequirement.for_kernel(spec, self.alpha_star, self.delta_star)
        res = assess_study(sample, spec, req, self.n_rep, self.random_state, self.mode, self.fit_mode)
        self.kernel_spec_ = spec
        self.eps_star_ = req.eps_star
        self.curve_ = res.curve
        self.power_law_ = res.fit
        self.n_star_ = res.n_hat
        self.generalizable_ = res.generalizable
        self.n_features_in_ = sample.n_a
        return self

    def predict_n_star(self, delta_star: float | None = None) -> int:
        """Required size for another similarity level, reusing the fitted curve."""
        check_is_fitted(self, "n_star_")
        if delta_star is None or self.power_law_ is None:
            return self.n_star_
        eps = GenRequirement.for_kernel(self.kernel_spec_, self.alpha_star, delta_star).eps_star
        return predict_n_star(self.power_law_, eps)
