import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from genrank.exceptions import InputError
from genrank.estimators import GeneralizabilityEstimator, PowerLawRegressor, RankingTransformer
from genrank.kernels import KernelSpec, epsilon_star
from genrank.synthetic import sample_from, uniform_distribution


def test_ranking_transformer():
    X = np.array([[0.9, 0.5, 0.5], [0.1, np.nan, 0.3]])
    assert RankingTransformer().fit_transform(X).tolist() == [[0, 1, 1], [1, 2, 0]]
    assert RankingTransformer(higher_is_better=False).fit_transform(X).tolist() == [[1, 0, 0], [0, 2, 1]]
    assert RankingTransformer(tie_tol=0.5).fit_transform([[0.9, 0.6, 0.0]]).tolist()[0][0] == 0
    t = RankingTransformer().fit(X)
    with pytest.raises(InputError):
        t.transform([[1.0, 2.0]])
    with pytest.raises(NotFittedError):
        RankingTransformer().transform(X)


def test_power_law_regressor_exact():
    n = np.array([2, 4, 8, 16])
    q = 3.0 / np.sqrt(n)
    reg = PowerLawRegressor().fit(q.reshape(-1, 1), n)
    assert reg.coef_[0] == pytest.approx(-2.0)
    assert reg.intercept_ == pytest.approx(2 * math.log(3.0))
    assert reg.predict(q) == pytest.approx(n)
    assert reg.score(q.reshape(-1, 1), n) == pytest.approx(1.0)
    assert reg.n_star(0.75) == 16
    fixed = PowerLawRegressor(fit_mode="fixed").fit(q.reshape(-1, 1), n)
    assert fixed.coef_[0] == -2.0


def test_params_and_clone():
    est = GeneralizabilityEstimator(kernel="mallows", alpha_star=0.9)
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert c.set_params(delta_star=0.1).delta_star == 0.1


def test_generalizability_estimator_fit():
    X = sample_from(uniform_distribution(3), 40, seed=1).results
    est = GeneralizabilityEstimator(kernel="mallows").fit(X)
    spec = KernelSpec.mallows(3)
    assert est.kernel_spec_ == spec and est.eps_star_ == epsilon_star(spec, 0.05)
    assert est.n_features_in_ == 3 and est.n_star_ >= 1
    assert est.generalizable_ == (est.n_star_ <= 40)
    assert est.predict_n_star() == est.n_star_
    assert est.predict_n_star(0.2) <= est.n_star_
    again = clone(est).fit(X)
    assert again.n_star_ == est.n_star_


def test_estimator_point_mass_and_rbf():
    est = GeneralizabilityEstimator(kernel="jaccard").fit([[0, 1, 2]] * 10)
    assert est.n_star_ == 1 and est.power_law_ is None and est.predict_n_star(0.2) == 1
    rng = np.random.default_rng(0)
    est = GeneralizabilityEstimator(kernel="rbf").fit(rng.normal(size=(30, 4)))
    assert est.kernel_spec_.family == "rbf" and est.n_star_ >= 1
    with pytest.raises(InputError):
        GeneralizabilityEstimator(kernel="cosine").fit([[0, 1]] * 6)
    with pytest.raises(NotFittedError):
        GeneralizabilityEstimator().predict_n_star()
