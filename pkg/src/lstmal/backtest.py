"""Rolling-window one-step-ahead VaR/ES backtests and model comparison."""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .data import DataError, ReturnSeries
from .estimator import RiskForecaster
from .models import MODELS
from .scoring import ScoreReport, evaluate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BacktestConfig:
    """Settings of a rolling backtest.

    ``refit_every=1`` re-estimates before every forecast. Larger values
    reuse the latest estimate for that many steps. ``iters=0`` pins the
    parameters to ``theta_fixed`` (no sampling).
    """

    model: str = "lstm-al"
    alpha: float = 0.01
    window: int = 1000
    refit_every: int = 1
    iters: int = 50_000
    burnin: int = 15_000
    seed: int = 0
    warm_start: bool = True
    predictive: str = "mean"
    theta_fixed: Optional[tuple] = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if self.window < 200:
            raise ValueError("window must be at least 200")
        if self.refit_every < 1:
            raise ValueError("refit_every must be at least 1")
        if self.iters == 0 and self.theta_fixed is None:
            raise ValueError("iters=0 needs theta_fixed")

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["theta_fixed"] is not None:
            d["theta_fixed"] = [float(v) for v in d["theta_fixed"]]
        return d


@dataclass(frozen=True)
class ForecastRecord:
    t: int
    date: str
    r_observed: float
    var_forecast: float
    es_forecast: float
    refit: bool
    vintage: int = field(default=-1, compare=False)


def refit_seed(seed: int, k: int) -> int:
    """Independent, reproducible seed for the ``k``-th refit."""
    return int(np.random.SeedSequence(seed, spawn_key=(k,)).generate_state(1)[0])


def _estimator(cfg: BacktestConfig, k: int, theta0) -> RiskForecaster:
    return RiskForecaster(
        model=cfg.model,
        alpha=cfg.alpha,
        n_iter=cfg.iters,
        burnin=cfg.burnin,
        random_state=refit_seed(cfg.seed, k),
        theta0=theta0,
        predictive=cfg.predictive,
    )


def _fit_window(cfg, k, window_values, theta0):
    return _estimator(cfg, k, theta0).fit(window_values)


def rolling_forecast(r: ReturnSeries, cfg: BacktestConfig, fits: Optional[dict] = None) -> list[ForecastRecord]:
    """Forecast ``(VaR_t, ES_t)`` for every ``t`` in ``window..n-1``.

    The estimate used at ``t`` is fitted on ``r[s - window:s]`` for the most
    recent refit point ``s <= t``, and the filter is run over
    ``r[t - window:t]`` plus one step. Nothing at or after ``t`` is read.

    If ``fits`` is given it is filled with ``{refit t: theta}``.
    """
    if not isinstance(r, ReturnSeries):
        r = ReturnSeries(np.asarray(r, dtype=float))
    n, w = len(r), cfg.window
    if n <= w:
        raise DataError(f"series of length {n} is not longer than the window {w}")
    values = r.values
    dates = r.date_labels()
    refit_points = list(range(w, n, cfg.refit_every))
    theta_fixed = None if cfg.theta_fixed is None else np.asarray(cfg.theta_fixed, dtype=float)

    estimators = {}
    if cfg.iters == 0:
        for k, s in enumerate(refit_points):
            estimators[s] = _fit_window(cfg, k, values[s - w:s], theta_fixed)
    elif not cfg.warm_start and cfg.n_jobs != 1:
        jobs = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_fit_window)(cfg, k, values[s - w:s], None) for k, s in enumerate(refit_points)
        )
        estimators = dict(zip(refit_points, jobs))
    else:
        theta0 = None
        for k, s in enumerate(refit_points):
            est = _fit_window(cfg, k, values[s - w:s], theta0)
            log.info("%s refit %d/%d at t=%d accept=%.3f", cfg.model, k + 1, len(refit_points), s,
                     est.chain_.acceptance_rate)
            estimators[s] = est
            if cfg.warm_start:
                theta0 = est.theta_

    records = []
    current, vintage = None, -1
    for t in range(w, n):
        refit = t in estimators
        if refit:
            current, vintage = estimators[t], t
            if fits is not None:
                fits[t] = current.theta_.copy()
        var, es = current.forecast(values[t - w:t])
        records.append(ForecastRecord(t, dates[t], float(values[t]), var, es, refit, vintage))
    return records


RECORD_COLUMNS = ("t", "date", "return", "var", "es", "refit")


def write_records(path, records: Sequence[ForecastRecord]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for rec in records:
            w.writerow([rec.t, rec.date, repr(rec.r_observed), repr(rec.var_forecast),
                        repr(rec.es_forecast), int(rec.refit)])


def read_records(path) -> list[ForecastRecord]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS[:5]) - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"forecast file lacks columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(ForecastRecord(
                    int(row["t"]), row["date"], float(row["return"]), float(row["var"]),
                    float(row["es"]), bool(int(row.get("refit") or 0)),
                ))
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
    if not out:
        raise DataError("no observations")
    return out


def write_tidy(path, records: Sequence[ForecastRecord]) -> None:
    """Long-format ``t,series,value`` rows for plotting."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "series", "value"])
        for rec in records:
            w.writerow([rec.t, "return", repr(rec.r_observed)])
            w.writerow([rec.t, "var", repr(rec.var_forecast)])
            w.writerow([rec.t, "es", repr(rec.es_forecast)])


def score_records(records: Sequence[ForecastRecord], alpha: float) -> ScoreReport:
    if not records:
        raise ValueError("nothing to evaluate")
    arr = np.array([(x.r_observed, x.var_forecast, x.es_forecast) for x in records])
    return evaluate(arr[:, 0], arr[:, 1], arr[:, 2], alpha)


@dataclass
class Comparison:
    reports: dict
    best: dict

    def to_text(self) -> str:
        cols = ("avg_quantile_loss", "avg_al_score", "violation_rate")
        heads = ("quantile loss", "AL score", "violation rate")
        width = max(8, max(map(len, self.reports)) + 2)
        lines = [f"{'model':<{width}}" + "".join(f"{h:>17}" for h in heads)]
        for name, rep in self.reports.items():
            cells = []
            for c in cols:
                mark = "*" if self.best.get(c) == name else " "
                cells.append(f"{getattr(rep, c):>16.6f}{mark}")
            lines.append(f"{name:<{width}}" + "".join(cells))
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "n", "avg_quantile_loss", "avg_al_score", "violation_rate",
                        "best_quantile_loss", "best_al_score"])
            for name, rep in self.reports.items():
                w.writerow([name, rep.n, repr(rep.avg_quantile_loss), repr(rep.avg_al_score),
                            repr(rep.violation_rate),
                            int(self.best["avg_quantile_loss"] == name),
                            int(self.best["avg_al_score"] == name)])


def compare(records_by_model: dict, alpha: float) -> Comparison:
    """Score several models over an identical out-of-sample span.

    The lowest quantile loss and AL score are flagged (first model wins ties).
    """
    if not records_by_model:
        raise ValueError("no models to compare")
    ref_name, ref = next(iter(records_by_model.items()))
    ref_key = [(x.t, x.r_observed) for x in ref]
    reports = {}
    for name, recs in records_by_model.items():
        if [(x.t, x.r_observed) for x in recs] != ref_key:
            raise DataError(f"{name} covers a different span than {ref_name}")
        reports[name] = score_records(recs, alpha)
    best = {c: min(reports, key=lambda m: getattr(reports[m], c)) for c in ("avg_quantile_loss", "avg_al_score")}
    return Comparison(reports, best)
