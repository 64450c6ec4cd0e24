"""Adaptive random-walk Metropolis sampler, priors and posterior summaries.

The sampler runs in two phases. For the first ``2d`` iterations proposals
are spherical normal with covariance ``0.1**2 / d``. Afterwards a proposal
is drawn from the mixture

    (1 - beta) N(theta_n, 2.38**2 / d * C_n) + beta N(theta_n, 0.1**2 / d * I)

where ``C_n`` is the running sample covariance of the chain. A proposal is
accepted iff ``u <= min(1, exp(log_target(theta*) - log_target(theta_n)))``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numba import njit


class MCMCError(RuntimeError):
    """Sampler could not start or its adaptation broke down."""


# ---------------------------------------------------------------------------
# priors

_UNIFORM, _NORMAL, _INVGAMMA = 0, 1, 2
# smallest value projection maps an inverse-gamma parameter to (finite density)
_IG_FLOOR = 1e-10


@dataclass(frozen=True)
class Uniform:
    lo: float = -5.0
    hi: float = 5.0


@dataclass(frozen=True)
class Normal:
    """Normal prior parameterised by mean and *variance*."""

    mean: float = 0.0
    variance: float = 0.1


@dataclass(frozen=True)
class InverseGamma:
    shape: float = 2.5
    scale: float = 0.25


Prior = Union[Uniform, Normal, InverseGamma]


@njit(cache=True)
def _log_prior_kernel(theta, kinds, p1, p2):
    total = 0.0
    for j in range(theta.shape[0]):
        x = theta[j]
        k = kinds[j]
        if k == 0:
            if x < p1[j] or x > p2[j]:
                return -np.inf
        elif k == 1:
            total += -0.5 * math.log(2.0 * math.pi * p2[j]) - (x - p1[j]) ** 2 / (2.0 * p2[j])
        else:
            if x <= 0.0:
                return -np.inf
            a = p1[j]
            b = p2[j]
            total += a * math.log(b) - math.lgamma(a) - (a + 1.0) * math.log(x) - b / x
    return total


class PriorSpec:
    """Independent per-parameter priors bound to a flat parameter order."""

    def __init__(self, priors: Sequence[Prior], names: Optional[Sequence[str]] = None):
        self.priors = tuple(priors)
        self.names = tuple(names) if names is not None else tuple(f"p{i + 1}" for i in range(len(self.priors)))
        if len(self.names) != len(self.priors):
            raise ValueError("one name per prior is required")
        kinds, p1, p2, lo, hi = [], [], [], [], []
        for p in self.priors:
            if isinstance(p, Uniform):
                if not p.lo < p.hi:
                    raise ValueError(f"empty uniform support {p}")
                kinds.append(_UNIFORM), p1.append(p.lo), p2.append(p.hi)
                lo.append(p.lo), hi.append(p.hi)
            elif isinstance(p, Normal):
                if p.variance <= 0:
                    raise ValueError(f"non-positive variance {p}")
                kinds.append(_NORMAL), p1.append(p.mean), p2.append(p.variance)
                lo.append(-np.inf), hi.append(np.inf)
            elif isinstance(p, InverseGamma):
                if p.shape <= 0 or p.scale <= 0:
                    raise ValueError(f"invalid inverse-gamma {p}")
                kinds.append(_INVGAMMA), p1.append(p.shape), p2.append(p.scale)
                lo.append(_IG_FLOOR), hi.append(np.inf)
            else:
                raise TypeError(f"unsupported prior {p!r}")
        self._kinds = np.array(kinds, dtype=np.int64)
        self._p1 = np.array(p1, dtype=float)
        self._p2 = np.array(p2, dtype=float)
        self.lower = np.array(lo)
        self.upper = np.array(hi)

    def __len__(self):
        return len(self.priors)

    def __call__(self, theta) -> float:
        return log_prior(theta, self)

    def project(self, theta) -> np.ndarray:
        """Clip ``theta`` onto the prior support."""
        return np.clip(np.asarray(theta, dtype=float), self.lower, self.upper)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        out = np.empty(len(self))
        for j, p in enumerate(self.priors):
            if isinstance(p, Uniform):
                out[j] = rng.uniform(p.lo, p.hi)
            elif isinstance(p, Normal):
                out[j] = rng.normal(p.mean, math.sqrt(p.variance))
            else:
                out[j] = p.scale / rng.gamma(p.shape)
        return out

    def describe(self) -> list:
        return [{"name": n, "prior": type(p).__name__, **p.__dict__} for n, p in zip(self.names, self.priors)]


def log_prior(theta, spec: PriorSpec) -> float:
    """Sum of per-parameter log prior densities (uniform terms count as 0)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(spec),):
        raise ValueError(f"theta has length {theta.size}, prior expects {len(spec)}")
    return float(_log_prior_kernel(theta, spec._kinds, spec._p1, spec._p2))


# ---------------------------------------------------------------------------
# proposal adaptation


class ProposalState:
    """Running mean and unbiased covariance of the chain (Welford updates)."""

    def __init__(self, d: int):
        self.d = d
        self.n = 0
        self.m = np.zeros(d)
        self._m2 = np.zeros((d, d))

    def update(self, x) -> None:
        x = np.asarray(x, dtype=float)
        self.n += 1
        delta = x - self.m
        self.m = self.m + delta / self.n
        self._m2 += np.outer(delta, x - self.m)

    @property
    def c(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros((self.d, self.d))
        c = self._m2 / (self.n - 1)
        return 0.5 * (c + c.T)

    def cholesky(self, scale: float, jitter: float = 1e-10) -> np.ndarray:
        cov = scale * self.c + jitter * np.eye(self.d)
        if not np.all(np.isfinite(cov)):
            raise MCMCError("proposal covariance became non-finite")
        try:
            return np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            w, v = np.linalg.eigh(cov)
            return v * np.sqrt(np.clip(w, jitter, None))


# ---------------------------------------------------------------------------
# chain


@dataclass
class Chain:
    draws: np.ndarray
    log_posts: np.ndarray
    accept_count: int
    iters: int
    burnin: int
    seed: Optional[int] = None
    thin: int = 1
    names: tuple = ()
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.atleast_2d(np.asarray(self.draws, dtype=float))
        self.log_posts = np.asarray(self.log_posts, dtype=float)
        if not self.names:
            self.names = tuple(f"p{i + 1}" for i in range(self.draws.shape[1]))

    @property
    def d(self) -> int:
        return self.draws.shape[1]

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.iters if self.iters else float("nan")

    @property
    def cut(self) -> int:
        """Index of the first stored draw after burn-in."""
        return -(-self.burnin // self.thin)

    def post_burnin(self, burnin: Optional[int] = None) -> np.ndarray:
        cut = self.cut if burnin is None else -(-burnin // self.thin)
        return self.draws[cut:]

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "iters": self.iters,
            "burnin": self.burnin,
            "thin": self.thin,
            "accept_count": self.accept_count,
            "acceptance_rate": self.acceptance_rate,
            "names": list(self.names),
            "config": self.config,
        }

    def to_csv(self, path) -> None:
        """Write ``iter,logpost,p1..pd`` plus a ``<path>.json`` sidecar."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "logpost", *(f"p{i + 1}" for i in range(self.d))])
            for i, (lp, row) in enumerate(zip(self.log_posts, self.draws)):
                w.writerow([(i + 1) * self.thin, repr(float(lp)), *(repr(float(v)) for v in row)])
        Path(str(path) + ".json").write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Chain":
        path = Path(path)
        side_path = Path(str(path) + ".json")
        meta = json.loads(side_path.read_text()) if side_path.is_file() else {}
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] == 0:
            raise MCMCError(f"{path}: chain file holds no draws")
        return cls(
            draws=data[:, 2:],
            log_posts=data[:, 1],
            accept_count=int(meta.get("accept_count", 0)),
            iters=int(meta.get("iters", data.shape[0])),
            burnin=int(meta.get("burnin", 0)),
            seed=meta.get("seed"),
            thin=int(meta.get("thin", 1)),
            names=tuple(meta.get("names", ())),
            config=meta.get("config", {}),
        )


def _seed_of(seed) -> Optional[int]:
    if seed is None or isinstance(seed, (int, np.integer)):
        return None if seed is None else int(seed)
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.entropy) if isinstance(seed.entropy, int) else None
    return None


def adaptive_mh(
    log_target: Callable[[np.ndarray], float],
    theta0,
    iters: int,
    burnin: int = 0,
    seed=None,
    beta_mix: float = 0.05,
    thin: int = 1,
    adapt_on_accept_only: bool = False,
    names: Sequence[str] = (),
    config: Optional[dict] = None,
    callback: Optional[Callable[[int, np.ndarray, ProposalState], None]] = None,
) -> Chain:
    """Run the two-phase adaptive Metropolis sampler.

    Parameters
    ----------
    log_target : callable
        Unnormalised log posterior. ``-inf`` marks zero-probability points
        (prior support, inadmissible risk paths).
    theta0 : array-like of shape (d,)
        Starting point; ``log_target(theta0)`` must be finite.
    iters, burnin : int
        Total iterations and how many of them count as burn-in.
    seed : int, SeedSequence or Generator
        Source of randomness. A chain never touches global RNG state.
    beta_mix : float
        Weight of the small spherical component in the phase-2 mixture.
    adapt_on_accept_only : bool
        Update the running moments only when a proposal is accepted,
        instead of with every realised state.
    callback : callable, optional
        Called as ``callback(n, theta_n, proposal_state)`` after iteration ``n``.

    Returns
    -------
    Chain
        All ``iters`` post-step states (thinned), with aligned log targets.
    """
    theta = np.array(theta0, dtype=float).reshape(-1)
    d = theta.size
    if d < 1:
        raise ValueError("theta0 must hold at least one parameter")
    if iters <= burnin or burnin < 0:
        raise ValueError(f"need iters > burnin >= 0, got iters={iters}, burnin={burnin}")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    lp = float(log_target(theta))
    if not np.isfinite(lp):
        raise MCMCError("log target is not finite at the starting point")

    sd_ini = math.sqrt(0.1**2 / d)
    scale_opt = 2.38**2 / d
    state = ProposalState(d)
    state.update(theta)

    n_keep = iters // thin
    draws = np.empty((n_keep, d))
    log_posts = np.empty(n_keep)
    accepted = 0
    k = 0
    for n in range(1, iters + 1):
        z = rng.standard_normal(d)
        if n <= 2 * d or rng.random() < beta_mix:
            proposal = theta + sd_ini * z
        else:
            proposal = theta + state.cholesky(scale_opt) @ z
        lp_new = float(log_target(proposal))
        u = rng.random()
        # NaN compares False, so it is rejected like -inf
        took = lp_new > -np.inf and (u == 0.0 or math.log(u) <= lp_new - lp)
        if took:
            theta, lp = proposal, lp_new
            accepted += 1
        if took or not adapt_on_accept_only:
            state.update(theta)
        if callback is not None:
            callback(n, theta, state)
        if n % thin == 0:
            draws[k] = theta
            log_posts[k] = lp
            k += 1

    cfg = {"beta_mix": beta_mix, "adapt_on_accept_only": adapt_on_accept_only}
    cfg.update(config or {})
    return Chain(draws, log_posts, accepted, iters, burnin, _seed_of(seed), thin, tuple(names), cfg)


# ---------------------------------------------------------------------------
# summaries

SUMMARY_COLUMNS = ("mean", "std", "min", "max", "skew", "kurt")


def posterior_summary(chain: Chain, burnin: Optional[int] = None) -> dict:
    """Per-parameter mean, std (ddof=1), min, max, skewness, excess kurtosis.

    A parameter whose post-burn-in draws are all identical gets skew and
    kurt of 0 and ``degenerate=True``.
    """
    x = chain.post_burnin(burnin)
    if x.shape[0] < 2:
        raise MCMCError("posterior summary needs at least two post-burn-in draws")
    out = {}
    for j, name in enumerate(chain.names):
        col = x[:, j]
        mean = col.mean()
        dev = col - mean
        m2 = np.mean(dev**2)
        degenerate = bool(np.ptp(col) == 0.0)
        if degenerate:
            skew = kurt = 0.0
        else:
            skew = np.mean(dev**3) / m2**1.5
            kurt = np.mean(dev**4) / m2**2 - 3.0
        out[name] = {
            "mean": float(mean),
            "std": float(col.std(ddof=1)),
            "min": float(col.min()),
            "max": float(col.max()),
            "skew": float(skew),
            "kurt": float(kurt),
            "degenerate": degenerate,
        }
    return out


def point_estimate(chain: Chain, burnin: Optional[int] = None, prior: Optional[PriorSpec] = None) -> np.ndarray:
    """Posterior mean of the post-burn-in draws, projected onto the prior support."""
    x = chain.post_burnin(burnin)
    if x.shape[0] == 0:
        raise MCMCError("no post-burn-in draws")
    est = x.mean(axis=0)
    return prior.project(est) if prior is not None else est


def format_summary(summary: dict, digits: int = 4) -> str:
    width = max(8, max(len(n) for n in summary) + 2)
    lines = [" " * width + "".join(f"{c:>11}" for c in SUMMARY_COLUMNS)]
    for name, row in summary.items():
        flag = " *" if row["degenerate"] else ""
        lines.append(f"{name:<{width}}" + "".join(f"{row[c]:>11.{digits}f}" for c in SUMMARY_COLUMNS) + flag)
    return "\n".join(lines)


def write_summary_csv(path, summary: dict) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", *SUMMARY_COLUMNS, "degenerate"])
        for name, row in summary.items():
            w.writerow([name, *(repr(row[c]) for c in SUMMARY_COLUMNS), int(row["degenerate"])])
