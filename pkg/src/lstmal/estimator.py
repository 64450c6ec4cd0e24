"""scikit-learn style estimator around the Bayesian VaR/ES models."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import ReturnSeries
from .mcmc import MCMCError, adaptive_mh, point_estimate, posterior_summary
from .models import ES_FALLBACK, FilterError, default_init, get_model


def check_returns(X, min_length: int = 1) -> np.ndarray:
    """Validate a return series and return it as a 1-d float array.

    Accepts a :class:`ReturnSeries`, a sequence, or an array of shape
    ``(n,)`` or ``(n, 1)``.
    """
    if isinstance(X, ReturnSeries):
        X = X.values
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    if X.ndim != 1:
        raise ValueError(f"expected a 1-d return series, got shape {X.shape}")
    if X.size < min_length:
        raise ValueError(f"need at least {min_length} returns, got {X.size}")
    if not np.all(np.isfinite(X)):
        raise ValueError("returns contain NaN or infinity")
    return X


class RiskForecaster(BaseEstimator):
    """Bayesian joint VaR/ES forecaster.

    Parameters
    ----------
    model : {"lstm-al", "sav-exp", "as-exc"}
    alpha : float
        Lower-tail probability of the VaR, in (0, 0.5).
    n_iter, burnin : int
        Adaptive MCMC length and burn-in. ``n_iter=0`` skips sampling and
        uses ``theta0`` as the parameter value.
    random_state : int or None
    theta0 : array-like or None
        MCMC starting point (warm start). Defaults to the model's own start.
    beta_mix : float
        Weight of the spherical component of the phase-2 proposal.
    adapt_on_accept_only : bool
        Adapt the proposal covariance only on accepted moves.
    es_fallback : float
        Multiplier giving the initial ES when no return falls below the
        initial VaR.
    predictive : {"mean", "posterior"}
        ``"mean"`` forecasts with the posterior-mean parameters;
        ``"posterior"`` averages VaR and ES over ``n_predictive`` draws.
    max_init_draws : int
        Prior draws tried when the default start is inadmissible.

    Attributes
    ----------
    theta_ : ndarray
        Point estimate used for forecasting.
    chain_ : Chain or None
    init_ : InitState
        Initial state derived from the training returns.
    """

    def __init__(
        self,
        model="lstm-al",
        alpha=0.01,
        n_iter=50_000,
        burnin=15_000,
        random_state=None,
        theta0=None,
        beta_mix=0.05,
        adapt_on_accept_only=False,
        es_fallback=ES_FALLBACK,
        predictive="mean",
        n_predictive=200,
        max_init_draws=1000,
    ):
        self.model = model
        self.alpha = alpha
        self.n_iter = n_iter
        self.burnin = burnin
        self.random_state = random_state
        self.theta0 = theta0
        self.beta_mix = beta_mix
        self.adapt_on_accept_only = adapt_on_accept_only
        self.es_fallback = es_fallback
        self.predictive = predictive
        self.n_predictive = n_predictive
        self.max_init_draws = max_init_draws

    def _start(self, spec, r, init, rng):
        candidates = []
        if self.theta0 is not None:
            candidates.append(np.asarray(self.theta0, dtype=float))
        candidates.append(spec.start(r, init))
        for theta in candidates:
            if theta.shape == (spec.dim,) and np.isfinite(spec.log_posterior(theta, r, init, self.alpha)):
                return theta
        for _ in range(self.max_init_draws):
            theta = spec.prior.sample(rng)
            if np.isfinite(spec.log_posterior(theta, r, init, self.alpha)):
                return theta
        raise MCMCError(f"no admissible starting point after {self.max_init_draws} prior draws")

    def fit(self, X, y=None):
        r = check_returns(X, min_length=50)
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        spec = get_model(self.model)
        init = default_init(r, self.alpha, self.es_fallback)
        mcmc_seq, start_seq = np.random.SeedSequence(self.random_state).spawn(2)

        if self.n_iter == 0:
            if self.theta0 is None:
                raise ValueError("n_iter=0 requires theta0")
            theta = np.asarray(self.theta0, dtype=float)
            if theta.shape != (spec.dim,):
                raise ValueError(f"theta0 must have length {spec.dim}")
            self.chain_ = None
            self.theta_ = theta.copy()
            self.theta_map_ = theta.copy()
        else:
            theta_start = self._start(spec, r, init, np.random.default_rng(start_seq))
            self.chain_ = adaptive_mh(
                lambda th: spec.log_posterior(th, r, init, self.alpha),
                theta_start,
                iters=self.n_iter,
                burnin=self.burnin,
                seed=np.random.default_rng(mcmc_seq),
                beta_mix=self.beta_mix,
                adapt_on_accept_only=self.adapt_on_accept_only,
                names=spec.param_names,
                config={"model": spec.name, "alpha": self.alpha, "random_state": self.random_state},
            )
            self.chain_.seed = self.random_state
            self.theta_ = point_estimate(self.chain_, prior=spec.prior)
            post = self.chain_.post_burnin()
            best = int(np.argmax(self.chain_.log_posts[self.chain_.cut:]))
            self.theta_map_ = post[best].copy()
        self.model_ = spec
        self.init_ = init
        self.train_log_posterior_ = spec.log_posterior(self.theta_, r, init, self.alpha)
        return self

    def summary(self) -> dict:
        check_is_fitted(self, "theta_")
        if self.chain_ is None:
            raise ValueError("no chain: the estimator was fitted with n_iter=0")
        return posterior_summary(self.chain_)

    def _path(self, theta, r, extend):
        init = default_init(r, self.alpha, self.es_fallback)
        return self.model_.path(theta, r, init, extend=extend)

    def _admissible_path(self, r, extend):
        for theta in (self.theta_, self.theta_map_):
            path = self._path(theta, r, extend)
            if path.admissible:
                return path
        raise FilterError("fitted parameters give a non-negative ES on this series")

    def predict(self, X) -> np.ndarray:
        """Filtered ``[VaR, ES]`` path over ``X``, shape ``(n, 2)``."""
        check_is_fitted(self, "theta_")
        r = check_returns(X, min_length=50)
        path = self._admissible_path(r, extend=False)
        return np.column_stack([path.var, path.es])

    def forecast(self, X) -> tuple[float, float]:
        """One-step-ahead ``(VaR, ES)`` for the period right after ``X``."""
        check_is_fitted(self, "theta_")
        r = check_returns(X, min_length=50)
        if self.predictive == "posterior" and self.chain_ is not None:
            draws = self.chain_.post_burnin()
            idx = np.linspace(0, len(draws) - 1, min(self.n_predictive, len(draws))).astype(int)
            pts = []
            for theta in draws[idx]:
                path = self._path(theta, r, extend=True)
                if path.admissible:
                    pts.append((path.var[-1], path.es[-1]))
            if pts:
                var, es = np.mean(pts, axis=0)
                return float(var), float(es)
        elif self.predictive not in ("mean", "posterior"):
            raise ValueError(f"unknown predictive mode {self.predictive!r}")
        path = self._admissible_path(r, extend=True)
        return float(path.var[-1]), float(path.es[-1])

    def score(self, X, y=None) -> float:
        """Negative average AL score of the in-sample path (higher is better)."""
        from .scoring import al_score

        r = check_returns(X, min_length=50)
        path = self.predict(r)
        return -float(np.mean(al_score(r[1:], path[1:, 0], path[1:, 1], self.alpha)))
