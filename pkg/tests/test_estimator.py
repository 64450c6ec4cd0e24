import numpy as np
import pytest
from sklearn.base import clone

from lstmal import RiskForecaster, check_returns
from lstmal.data import ReturnSeries
from lstmal.mcmc import MCMCError
from lstmal.models import default_init, get_model


@pytest.fixture(scope="module")
def returns():
    return np.random.default_rng(0).standard_t(5, 400)


def test_check_returns():
    assert check_returns([[1.0], [2.0]]).shape == (2,)
    assert check_returns(ReturnSeries(np.ones(3))).tolist() == [1.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        check_returns(np.ones((3, 2)))
    with pytest.raises(ValueError):
        check_returns([1.0, np.nan])
    with pytest.raises(ValueError):
        check_returns([1.0], min_length=2)


def test_params_and_clone():
    est = RiskForecaster(model="sav-exp", alpha=0.025, n_iter=100, burnin=10, random_state=3)
    params = est.get_params()
    assert params["model"] == "sav-exp" and params["alpha"] == 0.025
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(alpha=0.01)
    assert est.alpha == 0.01


def test_fit_predict(returns):
    est = RiskForecaster(model="sav-exp", n_iter=3000, burnin=1000, random_state=1).fit(returns)
    assert est.chain_.iters == 3000 and est.chain_.seed == 1
    assert est.theta_.shape == (4,)
    pred = est.predict(returns)
    assert pred.shape == (400, 2)
    assert np.all(pred[:, 1] < pred[:, 0]) and np.all(pred[:, 0] < 0)
    var, es = est.forecast(returns)
    assert es < var < 0
    assert np.isfinite(est.score(returns))
    assert set(est.summary()) == set(get_model("sav-exp").param_names)


def test_fit_reproducible(returns):
    a = RiskForecaster(model="as-exc", n_iter=1500, burnin=500, random_state=4).fit(returns)
    b = RiskForecaster(model="as-exc", n_iter=1500, burnin=500, random_state=4).fit(returns)
    assert a.chain_.draws.tobytes() == b.chain_.draws.tobytes()


def test_posterior_predictive(returns):
    est = RiskForecaster(model="sav-exp", n_iter=2000, burnin=1000, random_state=2,
                         predictive="posterior", n_predictive=50).fit(returns)
    var, es = est.forecast(returns)
    assert es < var < 0


def test_pinned_parameters(returns):
    init = default_init(returns, 0.01)
    theta = get_model("sav-exp").start(returns, init)
    est = RiskForecaster(model="sav-exp", n_iter=0, theta0=theta).fit(returns)
    assert est.chain_ is None
    np.testing.assert_array_equal(est.theta_, theta)
    with pytest.raises(ValueError):
        est.summary()
    with pytest.raises(ValueError):
        RiskForecaster(n_iter=0).fit(returns)


def test_validation(returns):
    with pytest.raises(ValueError):
        RiskForecaster(alpha=0.6).fit(returns)
    with pytest.raises(ValueError):
        RiskForecaster(model="nope").fit(returns)
    with pytest.raises(ValueError):
        RiskForecaster().fit(returns[:20])
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        RiskForecaster().predict(returns)


def test_no_admissible_start():
    # every return positive: the initial VaR cannot be negative
    with pytest.raises(ValueError):
        RiskForecaster(n_iter=10, burnin=0).fit(np.linspace(0.1, 1, 100))


def test_start_search_exhaustion(returns, monkeypatch):
    spec = get_model("sav-exp")
    monkeypatch.setattr(type(spec), "log_posterior", lambda self, *a, **k: -np.inf)
    with pytest.raises(MCMCError):
        RiskForecaster(model="sav-exp", n_iter=10, burnin=0, max_init_draws=5).fit(returns)
