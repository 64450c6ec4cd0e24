"""Synthetic return generators.

Random numbers come from numpy's PCG64 bit generator; normal variates use
numpy's ziggurat ``standard_normal``. A given seed therefore reproduces
the same series on every platform numpy supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import ReturnSeries
from .models import InitState, SavExpParams


@dataclass(frozen=True)
class SimOutput:
    returns: ReturnSeries
    logvol: np.ndarray
    seed: Optional[int]
    t_total: int
    t_keep: int


def sv_drift(v: float) -> float:
    """Deterministic part of the log-volatility transition."""
    return 0.1 + 0.96 * v - 0.8 * v * v / (1.0 + v * v) + 1.0 / (1.0 + math.exp(-v))


def simulate_nonlinear_sv(
    t_total: int = 6000,
    t_keep: int = 2000,
    seed: Optional[int] = None,
    *,
    v1: Optional[float] = None,
    zero_vol_noise: bool = False,
    unit_return_noise: bool = False,
) -> SimOutput:
    """Simulate the nonlinear stochastic-volatility model and keep the tail.

    ``v_1 ~ N(0, 1)``, ``v_t = drift(v_{t-1}) + sqrt(0.1) e_t`` and
    ``r_t = exp(v_t / 2) z_t`` with independent standard normal ``e, z``.

    ``v1``, ``zero_vol_noise`` and ``unit_return_noise`` override the
    corresponding random draws; they exist for testing the recursion.
    """
    if not 0 < t_keep <= t_total:
        raise ValueError(f"need 0 < t_keep <= t_total, got {t_keep}, {t_total}")
    rng = np.random.Generator(np.random.PCG64(seed))
    first = rng.standard_normal()
    eps_v = rng.standard_normal(t_total - 1)
    eps_r = rng.standard_normal(t_total)
    if zero_vol_noise:
        eps_v[:] = 0.0
    if unit_return_noise:
        eps_r[:] = 1.0

    v = np.empty(t_total)
    v[0] = first if v1 is None else float(v1)
    sd = math.sqrt(0.1)
    for t in range(1, t_total):
        v[t] = sv_drift(v[t - 1]) + sd * eps_v[t - 1]
    r = np.exp(v / 2.0) * eps_r
    keep = slice(t_total - t_keep, t_total)
    return SimOutput(ReturnSeries(r[keep]), v[keep].copy(), seed, t_total, t_keep)


def sample_al(var: float, es: float, alpha: float, rng: np.random.Generator) -> float:
    """One draw from the Asymmetric Laplace density with quantile ``var`` and ES ``es``.

    Below ``var`` (probability ``alpha``) the density is exponential with
    scale ``alpha * |es| / (1 - alpha)``; above it, exponential with scale ``|es|``.
    """
    if rng.random() < alpha:
        return var - rng.exponential(alpha * -es / (1.0 - alpha))
    return var + rng.exponential(-es)


def simulate_sav_exp(
    p: SavExpParams,
    n: int,
    alpha: float,
    init: InitState,
    seed: Optional[int] = None,
) -> tuple[ReturnSeries, np.ndarray, np.ndarray]:
    """Draw returns whose conditional law is AL with SAV-EXP dynamics.

    Returns ``(returns, var, es)``; the model is then correctly specified
    for the AL quasi-likelihood, which makes parameter recovery checkable.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    factor = 1.0 + math.exp(p.g0)
    r = np.empty(n)
    var = np.empty(n)
    es = np.empty(n)
    var[0], es[0] = init.var1, init.es1
    for t in range(n):
        if t:
            var[t] = p.b0 + p.b1 * var[t - 1] + p.b2 * abs(r[t - 1])
            es[t] = factor * var[t]
        r[t] = sample_al(var[t], es[t], alpha, rng)
    return ReturnSeries(r), var, es
