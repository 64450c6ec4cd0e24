"""Forecast evaluation: quantile loss, AL joint score, violation rate.

The quantile loss counts a violation when ``r < var`` while the AL score
uses ``r <= var``; the two only disagree on exact ties.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


def quantile_loss(r, var, alpha: float):
    """Pinball loss ``(r - var) * (alpha - 1{r < var})``; never negative."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    r = np.asarray(r, dtype=float)
    var = np.asarray(var, dtype=float)
    out = (r - var) * (alpha - (r < var))
    return float(out) if out.ndim == 0 else out


def al_score(r, var, es, alpha: float):
    """Negative AL log density of ``r`` given ``(var, es)``; needs ``es < 0``."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    r, var, es = (np.asarray(a, dtype=float) for a in (r, var, es))
    if np.any(es >= 0):
        raise ValueError("AL score is undefined for es >= 0")
    out = -np.log((alpha - 1.0) / es) - (r - var) * (alpha - (r <= var)) / (alpha * es)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScoreReport:
    avg_quantile_loss: float
    avg_al_score: float
    violation_rate: float
    n: int
    alpha: float

    def to_text(self) -> str:
        return "\n".join([
            f"observations      {self.n}",
            f"alpha             {self.alpha:g}",
            f"quantile loss     {self.avg_quantile_loss:.6f}",
            f"AL score          {self.avg_al_score:.6f}",
            f"violation rate    {self.violation_rate:.4f}",
        ])

    def to_csv(self, path) -> None:
        row = asdict(self)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(row))
            w.writerow([repr(v) for v in row.values()])


def evaluate(r, var, es, alpha: float) -> ScoreReport:
    """Average the per-observation losses over a forecast sample."""
    r, var, es = (np.asarray(a, dtype=float).reshape(-1) for a in (r, var, es))
    if r.size == 0:
        raise ValueError("nothing to evaluate")
    if not (r.size == var.size == es.size):
        raise ValueError("returns, VaR and ES must have equal length")
    ql = quantile_loss(r, var, alpha)
    al = al_score(r, var, es, alpha)
    return ScoreReport(
        avg_quantile_loss=float(np.mean(ql)),
        avg_al_score=float(np.mean(al)),
        violation_rate=float(np.mean(r <= var)),
        n=int(r.size),
        alpha=float(alpha),
    )


def binomial_band(alpha: float, n: int, k: float = 3.0) -> float:
    """Half-width of a ``k``-sigma band for a violation rate over ``n`` trials."""
    return k * math.sqrt(alpha * (1 - alpha) / n)
