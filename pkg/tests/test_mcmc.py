import math

import numpy as np
import pytest
from scipy import stats

from lstmal.mcmc import (
    Chain,
    InverseGamma,
    MCMCError,
    Normal,
    PriorSpec,
    ProposalState,
    Uniform,
    adaptive_mh,
    log_prior,
    point_estimate,
    posterior_summary,
    write_summary_csv,
)
from lstmal.models import get_model


def std_normal(th):
    return -0.5 * float(th @ th)


def make_chain(values, burnin=0):
    x = np.asarray(values, dtype=float).reshape(len(values), -1)
    return Chain(x, np.zeros(len(x)), 0, len(x), burnin)


# -- priors --------------------------------------------------------------------


def test_flat_prior_is_zero():
    spec = PriorSpec([Uniform()] * 4)
    assert log_prior([-4.9, 0.0, 3.0, 5.0], spec) == 0.0
    assert log_prior([5.1, 0.0, 0.0, 0.0], spec) == -np.inf


def test_inverse_gamma_support():
    spec = PriorSpec([InverseGamma(2.5, 0.25)])
    assert log_prior([-0.1], spec) == -np.inf
    assert log_prior([0.0], spec) == -np.inf


def test_normal_prior_at_zero_is_variance_reading():
    spec = PriorSpec([Normal(0.0, 0.1)])
    assert log_prior([0.0], spec) == pytest.approx(-0.5 * math.log(2 * math.pi * 0.1), abs=1e-12)
    assert log_prior([0.0], spec) == pytest.approx(0.232354, abs=1e-6)


def test_prior_matches_scipy(rng):
    spec = get_model("lstm-al").prior
    theta = spec.sample(rng)
    ref = (stats.norm(0, math.sqrt(0.1)).logpdf(theta[4])
           + stats.invgamma(2.5, scale=0.25).logpdf(theta[5])
           + stats.norm(0, math.sqrt(0.1)).logpdf(theta[6:]).sum())
    assert log_prior(theta, spec) == pytest.approx(ref, abs=1e-10)


def test_prior_length_mismatch():
    with pytest.raises(ValueError):
        log_prior([0.0, 0.0], PriorSpec([Uniform()]))


def test_project_into_support():
    spec = PriorSpec([Uniform(), InverseGamma()])
    p = spec.project([7.0, -1.0])
    assert p[0] == 5.0 and p[1] > 0
    assert np.isfinite(spec(p))


# -- sampler -------------------------------------------------------------------


def test_constant_target_accepts_everything():
    chain = adaptive_mh(lambda th: 0.0, np.zeros(3), iters=500, seed=1)
    assert chain.accept_count == 500


def test_same_seed_identical():
    a = adaptive_mh(std_normal, np.zeros(2), iters=2000, burnin=500, seed=7)
    b = adaptive_mh(std_normal, np.zeros(2), iters=2000, burnin=500, seed=7)
    assert a.draws.tobytes() == b.draws.tobytes()
    assert a.log_posts.tobytes() == b.log_posts.tobytes()
    c = adaptive_mh(std_normal, np.zeros(2), iters=2000, burnin=500, seed=8)
    assert a.draws.tobytes() != c.draws.tobytes()


def test_no_global_rng_use():
    np.random.seed(0)
    before = np.random.get_state()[1].copy()
    adaptive_mh(std_normal, np.zeros(1), iters=200, seed=3)
    assert np.array_equal(before, np.random.get_state()[1])


def test_start_must_be_finite():
    with pytest.raises(MCMCError):
        adaptive_mh(lambda th: -np.inf, np.zeros(1), iters=10)
    with pytest.raises(ValueError):
        adaptive_mh(std_normal, np.zeros(1), iters=10, burnin=10)


def test_draws_stay_in_support():
    spec = PriorSpec([Uniform(-1, 1), InverseGamma()])
    chain = adaptive_mh(spec, np.array([0.0, 0.3]), iters=3000, seed=2)
    assert all(np.isfinite(spec(th)) for th in chain.draws)


def test_phase_one_never_consults_covariance(monkeypatch):
    d = 3
    calls = []
    orig = ProposalState.cholesky

    def spy(self, *a, **k):
        calls.append(self.n)
        return orig(self, *a, **k)

    monkeypatch.setattr(ProposalState, "cholesky", spy)
    adaptive_mh(std_normal, np.zeros(d), iters=2 * d, seed=0)
    assert calls == []
    adaptive_mh(std_normal, np.zeros(d), iters=200, seed=0, beta_mix=0.0)
    # one factorisation per phase-two iteration
    assert len(calls) == 200 - 2 * d


def test_ks_against_target():
    chain = adaptive_mh(std_normal, np.zeros(1), iters=60_000, burnin=10_000, seed=11, thin=25)
    x = chain.post_burnin()[:, 0]
    stat = stats.kstest(x, "norm").statistic
    assert stat < 1.63 / math.sqrt(len(x))


def test_skewed_target_mean():
    # Gamma(3, 1): mean 3, variance 3
    def lt(th):
        x = th[0]
        return 2 * math.log(x) - x if x > 0 else -np.inf

    chain = adaptive_mh(lt, np.array([1.0]), iters=40_000, burnin=5000, seed=4)
    x = chain.post_burnin()[:, 0]
    assert abs(x.mean() - 3) < 0.15
    assert abs(x.var() - 3) < 0.4


@pytest.mark.parametrize("accept_only", [False, True])
def test_covariance_recursion_matches_brute_force(accept_only):
    rng = np.random.default_rng(5)
    checkpoints = set(rng.choice(np.arange(3, 3000), 10, replace=False).tolist())
    theta0 = np.array([0.5, -0.2, 0.1])
    states = [theta0]  # every state fed to the running moments
    errors = []

    def cb(n, th, state):
        if state.n > len(states):
            states.append(th.copy())
        if n in checkpoints:
            ref = np.cov(np.array(states), rowvar=False, ddof=1)
            errors.append(np.max(np.abs(state.c - ref)))
            assert np.allclose(state.m, np.mean(states, axis=0), atol=1e-12)

    adaptive_mh(std_normal, theta0, iters=3000, seed=9, callback=cb, adapt_on_accept_only=accept_only)
    assert len(errors) == 10
    assert max(errors) < 1e-8


def test_proposal_state_psd(rng):
    s = ProposalState(4)
    for x in rng.normal(size=(500, 4)):
        s.update(x)
    c = s.c
    assert np.allclose(c, c.T)
    assert np.linalg.eigvalsh(c).min() >= -1e-10


# -- summaries -----------------------------------------------------------------


def test_summary_constant_chain():
    s = posterior_summary(make_chain([2.5] * 10))["p1"]
    assert s["mean"] == 2.5 and s["std"] == 0.0
    assert s["skew"] == 0.0 and s["kurt"] == 0.0 and s["degenerate"]


def test_summary_two_point():
    s = posterior_summary(make_chain([-1.0, 1.0]))["p1"]
    assert s["mean"] == 0.0
    assert s["std"] == pytest.approx(math.sqrt(2))  # ddof = 1
    assert s["skew"] == 0.0
    assert s["kurt"] == pytest.approx(-2.0)
    assert not s["degenerate"]


def test_summary_normal_oracle():
    x = np.random.default_rng(123).normal(1.0, 2.0, 100_000)
    s = posterior_summary(make_chain(x))["p1"]
    assert abs(s["mean"] - 1.0) < 0.05
    assert abs(s["std"] - 2.0) < 0.05
    assert abs(s["skew"]) < 0.05
    assert abs(s["kurt"]) < 0.05


def test_summary_needs_two_draws():
    with pytest.raises(MCMCError):
        posterior_summary(make_chain([1.0, 2.0, 3.0], burnin=2))


def test_point_estimate_mirrors_summary():
    for vals in ([3.0] * 5, [-1.0, 1.0], list(np.random.default_rng(0).normal(size=1000))):
        ch = make_chain(vals)
        assert point_estimate(ch)[0] == pytest.approx(posterior_summary(ch)["p1"]["mean"])
    with pytest.raises(MCMCError):
        point_estimate(make_chain([1.0, 2.0], burnin=2))


def test_chain_round_trip(tmp_path):
    chain = adaptive_mh(std_normal, np.zeros(2), iters=300, burnin=100, seed=5,
                        names=("a", "b"), config={"k": 1})
    chain.to_csv(tmp_path / "c.csv")
    back = Chain.from_csv(tmp_path / "c.csv")
    assert back.draws.tobytes() == chain.draws.tobytes()
    assert back.log_posts.tobytes() == chain.log_posts.tobytes()
    assert back.names == ("a", "b") and back.seed == 5 and back.burnin == 100
    assert posterior_summary(back) == posterior_summary(chain)
    write_summary_csv(tmp_path / "s.csv", posterior_summary(back))
    assert (tmp_path / "s.csv").read_text().startswith("parameter,mean,std,min,max,skew,kurt,degenerate")
