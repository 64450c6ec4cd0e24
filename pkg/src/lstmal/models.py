"""VaR/ES filter recursions and the Asymmetric Laplace quasi-likelihood.

All filters run over a return series ``r`` and produce risk values aligned
with it: position 0 is taken from an :class:`InitState`, and the value at
position ``t >= 1`` depends only on ``r[:t]``. Passing ``extend=True``
appends one extra step, which is the one-step-ahead forecast after the
last observed return.

Naming: the LSTM-AL VaR recursion is written here as

    VaR_t = eta_t + beta_abs * |r_{t-1}| + beta_lag * VaR_{t-1}

so that ``beta_abs``/``beta_lag`` are not confused with the intercept
and persistence coefficients ``b0``/``b1`` of the SAV recursion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit

from .data import ReturnSeries
from .lstm import LSTM_PARAM_NAMES, LstmParams, LstmState, cell_step
from .mcmc import InverseGamma, Normal, PriorSpec, Uniform

GUARD = 1e8
ES_FALLBACK = 1.1


class FilterError(ArithmeticError):
    """A stand-alone filter produced a non-finite value."""


def _values(r) -> np.ndarray:
    if isinstance(r, ReturnSeries):
        return r.values
    return np.asarray(r, dtype=float).reshape(-1)


# ---------------------------------------------------------------------------
# parameter blocks


@dataclass(frozen=True)
class SavExpParams:
    b0: float
    b1: float
    b2: float
    g0: float

    def to_array(self):
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, v):
        return cls(*map(float, np.asarray(v, dtype=float).reshape(4)))


@dataclass(frozen=True)
class AsExcParams:
    b0: float
    b1: float
    b2: float
    b3: float
    g0: float
    g1: float
    g2: float

    def to_array(self):
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, v):
        return cls(*map(float, np.asarray(v, dtype=float).reshape(7)))


@dataclass(frozen=True)
class LstmAlParams:
    beta_abs: float
    beta_lag: float
    gamma0: float
    gamma1: float
    alpha0: float
    alpha1: float
    lstm: LstmParams = field(default_factory=LstmParams)

    def to_array(self):
        head = [self.beta_abs, self.beta_lag, self.gamma0, self.gamma1, self.alpha0, self.alpha1]
        return np.concatenate([np.array(head, dtype=float), self.lstm.to_array()])

    @classmethod
    def from_array(cls, v):
        v = np.asarray(v, dtype=float).reshape(18)
        return cls(*map(float, v[:6]), lstm=LstmParams.from_array(v[6:]))


@dataclass(frozen=True)
class InitState:
    var1: float
    es1: float
    x1: float
    eta0: float = 0.0
    lstm0: LstmState = LstmState()

    def __post_init__(self):
        if not self.es1 < self.var1 < 0:
            raise ValueError(f"need es1 < var1 < 0, got es1={self.es1}, var1={self.var1}")
        if self.x1 < 0:
            raise ValueError("x1 must be non-negative")


def default_init(r_in, alpha: float, es_fallback: float = ES_FALLBACK) -> InitState:
    """Initial VaR/ES from the empirical lower tail of the in-sample returns.

    ``var1`` is the ``alpha`` sample quantile using the "higher" order
    statistic (index ``ceil((n - 1) * alpha)`` of the sorted sample);
    ``es1`` is the mean of returns strictly below it, or
    ``es_fallback * var1`` if there are none.
    """
    r = _values(r_in)
    if r.size < 50:
        raise ValueError(f"need at least 50 in-sample returns, got {r.size}")
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    var1 = float(np.quantile(r, alpha, method="higher"))
    if var1 >= 0:
        raise ValueError(f"empirical {alpha} quantile {var1} is not negative")
    tail = r[r < var1]
    es1 = float(tail.mean()) if tail.size else es_fallback * var1
    return InitState(var1, es1, var1 - es1)


# ---------------------------------------------------------------------------
# compiled recursions


@njit(cache=True)
def _sav_kernel(b0, b1, b2, r, var1, n):
    var = np.empty(n)
    var[0] = var1
    for t in range(1, n):
        var[t] = b0 + b1 * var[t - 1] + b2 * abs(r[t - 1])
    return var


@njit(cache=True)
def _as_kernel(b0, b1, b2, b3, r, var1, n):
    var = np.empty(n)
    var[0] = var1
    for t in range(1, n):
        x = r[t - 1]
        var[t] = b0 + b1 * var[t - 1] + b2 * max(x, 0.0) + b3 * (-min(x, 0.0))
    return var


@njit(cache=True)
def _exc_kernel(var, r, g0, g1, g2, x1):
    n = var.shape[0]
    x = np.empty(n)
    es = np.empty(n)
    x[0] = x1
    es[0] = var[0] - x1
    for t in range(1, n):
        if r[t - 1] <= var[t - 1]:
            x[t] = g0 + g1 * (var[t - 1] - r[t - 1]) + g2 * x[t - 1]
        else:
            x[t] = x[t - 1]
        es[t] = var[t] - x[t]
    return es, x


@njit(cache=True)
def _lstm_al_kernel(theta, r, var1, es1, eta0, h0, c0, n, stop_early):
    beta_abs, beta_lag, gamma0, gamma1, alpha0, alpha1 = theta[0], theta[1], theta[2], theta[3], theta[4], theta[5]
    w = theta[6:18]
    var = np.empty(n)
    es = np.empty(n)
    eta = np.empty(n)
    h = np.empty(n)
    c = np.empty(n)
    var[0], es[0], eta[0], h[0], c[0] = var1, es1, eta0, h0, c0
    ok = True
    filled = n
    for t in range(1, n):
        ht, ct = cell_step(w, eta[t - 1], h[t - 1], c[t - 1])
        h[t] = ht
        c[t] = ct
        eta[t] = alpha0 + alpha1 * ht
        var[t] = eta[t] + beta_abs * abs(r[t - 1]) + beta_lag * var[t - 1]
        es[t] = (1.0 + math.exp(gamma0 + gamma1 * ht)) * var[t]
        if not (abs(var[t]) < np.inf and abs(ct) < np.inf and abs(es[t]) < np.inf):
            ok = False
            filled = t + 1
            break
        if es[t] >= 0.0 or abs(var[t]) > 1e8 or abs(ct) > 1e8:
            ok = False
            if stop_early:
                filled = t + 1
                break
    return var, es, eta, h, c, ok, filled


@njit(cache=True)
def _admissible(var, es):
    for t in range(var.shape[0]):
        if not (abs(var[t]) <= 1e8 and es[t] < 0.0 and es[t] > -np.inf):
            return False
    return True


@njit(cache=True)
def _al_loglik_kernel(r, var, es, alpha):
    total = 0.0
    for t in range(r.shape[0]):
        if not es[t] < 0.0:
            return -np.inf
        hit = 1.0 if r[t] <= var[t] else 0.0
        total += math.log((alpha - 1.0) / es[t]) + (r[t] - var[t]) * (alpha - hit) / (alpha * es[t])
    return total


# ---------------------------------------------------------------------------
# stand-alone recursions


def _finite_or_raise(arr, what):
    if not np.all(np.isfinite(arr)):
        raise FilterError(f"{what} produced a non-finite value")
    return arr


def filter_sav(p: SavExpParams, r, var1: float, extend: bool = False) -> np.ndarray:
    """Symmetric Absolute Value: ``VaR_t = b0 + b1 VaR_{t-1} + b2 |r_{t-1}|``."""
    if not var1 < 0:
        raise ValueError("var1 must be negative")
    r = _values(r)
    return _finite_or_raise(_sav_kernel(p.b0, p.b1, p.b2, r, float(var1), r.size + extend), "SAV")


def filter_as(p: AsExcParams, r, var1: float, extend: bool = False) -> np.ndarray:
    """Asymmetric Slope with separate slopes on positive and negative returns."""
    if not var1 < 0:
        raise ValueError("var1 must be negative")
    r = _values(r)
    return _finite_or_raise(_as_kernel(p.b0, p.b1, p.b2, p.b3, r, float(var1), r.size + extend), "AS")


def es_exp(var, g0: float) -> np.ndarray:
    """ES as a fixed multiple ``1 + exp(g0)`` of VaR."""
    var = np.asarray(var, dtype=float)
    if np.any(var >= 0):
        raise ValueError("EXP link needs VaR < 0 everywhere")
    return (1.0 + math.exp(g0)) * var


def es_exc(var, r, g0: float, g1: float, g2: float, x1: float):
    """Mean-exceedance ES link; returns ``(es, x)`` with ``es = var - x``.

    The gap ``x`` is updated only after a violation ``r_{t-1} <= VaR_{t-1}``.
    ``r`` may be one element shorter than ``var`` (forecast extension).
    """
    if min(g0, g1, g2) < 0 or x1 < 0:
        raise ValueError("EXC coefficients and the initial gap must be non-negative")
    var = np.asarray(var, dtype=float)
    r = _values(r)
    if r.size < var.size - 1:
        raise ValueError("return series too short for the VaR path")
    es, x = _exc_kernel(var, r, float(g0), float(g1), float(g2), float(x1))
    return _finite_or_raise(es, "EXC"), x


@dataclass
class RiskPath:
    var: np.ndarray
    es: np.ndarray
    admissible: bool = True
    eta: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.var)

    def to_csv(self, path, r: ReturnSeries, aux: bool = False) -> None:
        """Write ``t,date,return,var,es`` (plus any auxiliary states if ``aux``)."""
        extra = {k: getattr(self, k) for k in ("eta", "h", "c", "x") if aux and getattr(self, k) is not None}
        dates = r.date_labels()
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "date", "return", "var", "es", *extra])
            for t in range(len(self)):
                d, ret = (dates[t], repr(float(r.values[t]))) if t < len(r) else ("", "")
                w.writerow([t, d, ret, repr(float(self.var[t])), repr(float(self.es[t])),
                            *(repr(float(v[t])) for v in extra.values())])


def filter_lstm_al(p, r, init: InitState, extend: bool = False) -> RiskPath:
    """Run the LSTM-AL recursion.

    For ``t >= 1`` the cell consumes the previous drift ``eta_{t-1}``
    (``init.eta0`` at the first step) and the previous ``(h, C)``::

        h_t     = LSTM(eta_{t-1}, h_{t-1}, C_{t-1})
        eta_t   = alpha0 + alpha1 * h_t
        VaR_t   = eta_t + beta_abs * |r_{t-1}| + beta_lag * VaR_{t-1}
        ES_t    = (1 + exp(gamma0 + gamma1 * h_t)) * VaR_t

    Position 0 carries ``init.var1``/``init.es1``. A path with any
    ``ES_t >= 0`` or a blown-up state is returned with
    ``admissible=False`` rather than raising.
    """
    theta = p.to_array() if isinstance(p, LstmAlParams) else np.asarray(p, dtype=float)
    r = _values(r)
    var, es, eta, h, c, ok, filled = _lstm_al_kernel(
        theta, r, init.var1, init.es1, init.eta0, init.lstm0.h, init.lstm0.c, r.size + extend, False
    )
    if filled < var.size:
        raise FilterError(f"LSTM-AL state became non-finite at t={filled - 1}")
    return RiskPath(var, es, bool(ok), eta=eta, h=h, c=c)


def al_log_density(r, var, es, alpha: float) -> np.ndarray:
    """Per-observation log of the Asymmetric Laplace density (``es < 0``)."""
    r, var, es = (np.asarray(a, dtype=float) for a in (r, var, es))
    hit = (r <= var).astype(float)
    return np.log((alpha - 1.0) / es) + (r - var) * (alpha - hit) / (alpha * es)


def al_log_likelihood(r, path: RiskPath, alpha: float) -> float:
    """Sum of AL log densities; ``-inf`` if any ``ES_t >= 0``."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    r = _values(r)
    if r.size != len(path):
        raise ValueError(f"length mismatch: {r.size} returns vs path of {len(path)}")
    return float(_al_loglik_kernel(r, np.asarray(path.var, float), np.asarray(path.es, float), alpha))


# ---------------------------------------------------------------------------
# model definitions used by estimation and backtesting


class RiskModel:
    """A VaR/ES model: its parameter names, prior and filter."""

    name: str = ""
    param_names: tuple = ()

    def __init__(self):
        self.prior = self.make_prior()

    @property
    def dim(self) -> int:
        return len(self.param_names)

    def make_prior(self) -> PriorSpec:
        raise NotImplementedError

    def path(self, theta, r, init: InitState, extend: bool = False, stop_early: bool = False) -> RiskPath:
        raise NotImplementedError

    def start(self, r, init: InitState) -> np.ndarray:
        """A deterministic, usually admissible, starting point for MCMC."""
        raise NotImplementedError

    def log_likelihood(self, theta, r, init: InitState, alpha: float) -> float:
        r = _values(r)
        path = self.path(theta, r, init, stop_early=True)
        if not path.admissible:
            return -np.inf
        return float(_al_loglik_kernel(r, path.var, path.es, alpha))

    def log_posterior(self, theta, r, init: InitState, alpha: float) -> float:
        theta = np.asarray(theta, dtype=float)
        lp = float(self.prior(theta))
        if lp == -np.inf:
            return lp
        return lp + self.log_likelihood(theta, r, init, alpha)

    def __repr__(self):
        return f"{type(self).__name__}()"


def _sav_start(r, init):
    # slopes chosen so the stationary SAV level equals var1; the intercept
    # is kept inside the flat-prior support by raising the persistence
    b2 = -0.1
    level, m = init.var1, float(np.mean(np.abs(r)))
    b0 = float(np.clip(0.15 * level - b2 * m, -4.5, 4.5))
    b1 = 1.0 - (b0 + b2 * m) / level
    g0 = math.log(init.es1 / init.var1 - 1.0)
    return b0, float(np.clip(b1, -0.99, 0.999)), b2, float(np.clip(g0, -4.9, 4.9))


class SavExp(RiskModel):
    name = "sav-exp"
    param_names = ("b0", "b1", "b2", "g0")

    def make_prior(self):
        return PriorSpec([Uniform(-5, 5)] * 4, self.param_names)

    def path(self, theta, r, init, extend=False, stop_early=False):
        b0, b1, b2, g0 = np.asarray(theta, dtype=float)
        r = _values(r)
        var = _sav_kernel(b0, b1, b2, r, init.var1, r.size + extend)
        es = (1.0 + math.exp(g0)) * var
        es[0] = init.es1
        return RiskPath(var, es, bool(_admissible(var, es)))

    def start(self, r, init):
        return np.array(_sav_start(_values(r), init))


class AsExc(RiskModel):
    name = "as-exc"
    param_names = ("b0", "b1", "b2", "b3", "g0", "g1", "g2")

    def make_prior(self):
        return PriorSpec([Uniform(-5, 5)] * 4 + [Uniform(0, 5)] * 3, self.param_names)

    def path(self, theta, r, init, extend=False, stop_early=False):
        b0, b1, b2, b3, g0, g1, g2 = np.asarray(theta, dtype=float)
        r = _values(r)
        var = _as_kernel(b0, b1, b2, b3, r, init.var1, r.size + extend)
        es, x = _exc_kernel(var, r, g0, g1, g2, init.x1)
        es[0] = init.es1
        return RiskPath(var, es, bool(_admissible(var, es)), x=x)

    def start(self, r, init):
        b0, b1, b2, _ = _sav_start(_values(r), init)
        return np.array([b0, b1, b2 / 2, b2, min(0.5 * init.x1, 4.9), 0.1, 0.5])


class LstmAl(RiskModel):
    name = "lstm-al"
    param_names = ("beta_abs", "beta_lag", "gamma0", "gamma1", "alpha0", "alpha1") + LSTM_PARAM_NAMES

    def make_prior(self):
        return PriorSpec(
            [Uniform(-5, 5)] * 4 + [Normal(0.0, 0.1), InverseGamma(2.5, 0.25)] + [Normal(0.0, 0.1)] * 12,
            self.param_names,
        )

    def path(self, theta, r, init, extend=False, stop_early=False):
        r = _values(r)
        var, es, eta, h, c, ok, filled = _lstm_al_kernel(
            np.asarray(theta, dtype=float), r, init.var1, init.es1, init.eta0,
            init.lstm0.h, init.lstm0.c, r.size + extend, stop_early,
        )
        if filled < var.size:
            for a in (var, es, eta, h, c):
                a[filled:] = np.nan
        return RiskPath(var, es, bool(ok), eta=eta, h=h, c=c)

    def start(self, r, init):
        b0, b1, b2, g0 = _sav_start(_values(r), init)
        alpha1 = 0.05
        # zero LSTM weights settle at C = 0.5, h = 0.5 * tanh(0.5)
        alpha0 = b0 - alpha1 * 0.5 * math.tanh(0.5)
        return np.concatenate([[b2, b1, g0, 0.0, alpha0, alpha1], np.zeros(12)])


MODELS = {m.name: m for m in (LstmAl, SavExp, AsExc)}


def get_model(name: str) -> RiskModel:
    try:
        return MODELS[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
