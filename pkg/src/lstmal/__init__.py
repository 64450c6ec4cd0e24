"""Bayesian LSTM-driven joint Value-at-Risk / Expected Shortfall forecasting."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    PriceSeries,
    ReturnSeries,
    WindowSplit,
    load_price_csv,
    load_return_csv,
    split,
    to_log_returns,
)
from .estimator import RiskForecaster, check_returns  # noqa: E402
from .lstm import LstmParams, LstmState, lstm_step  # noqa: E402
from .models import (  # noqa: E402
    AsExcParams,
    InitState,
    LstmAlParams,
    RiskPath,
    SavExpParams,
    al_log_likelihood,
    default_init,
    es_exc,
    es_exp,
    filter_as,
    filter_lstm_al,
    filter_sav,
    get_model,
)
from .scoring import ScoreReport, al_score, evaluate, quantile_loss  # noqa: E402
from .sim import simulate_nonlinear_sv  # noqa: E402

__all__ = [
    "AsExcParams", "InitState", "LstmAlParams", "LstmParams", "LstmState", "PriceSeries",
    "ReturnSeries", "RiskForecaster", "RiskPath", "SavExpParams", "ScoreReport", "WindowSplit",
    "al_log_likelihood", "al_score", "check_returns", "default_init", "es_exc", "es_exp",
    "evaluate", "filter_as", "filter_lstm_al", "filter_sav", "get_model", "load_price_csv",
    "load_return_csv", "lstm_step", "quantile_loss", "simulate_nonlinear_sv", "split",
    "to_log_returns",
]
