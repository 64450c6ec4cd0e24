"""Scalar LSTM cell.

The data-input line uses the logistic function rather than ``tanh``, so
starting from a non-negative cell state the cell state stays positive.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np
from numba import njit

LSTM_PARAM_NAMES = (
    "mu_f", "omega_f", "b_f",
    "mu_i", "omega_i", "b_i",
    "mu_d", "omega_d", "b_d",
    "mu_o", "omega_o", "b_o",
)


@dataclass(frozen=True)
class LstmParams:
    mu_f: float = 0.0
    omega_f: float = 0.0
    b_f: float = 0.0
    mu_i: float = 0.0
    omega_i: float = 0.0
    b_i: float = 0.0
    mu_d: float = 0.0
    omega_d: float = 0.0
    b_d: float = 0.0
    mu_o: float = 0.0
    omega_o: float = 0.0
    b_o: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, values) -> "LstmParams":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(LSTM_PARAM_NAMES),):
            raise ValueError(f"expected {len(LSTM_PARAM_NAMES)} LSTM weights, got {values.shape}")
        return cls(*map(float, values))


assert tuple(f.name for f in fields(LstmParams)) == LSTM_PARAM_NAMES


@dataclass(frozen=True)
class LstmState:
    h: float = 0.0
    c: float = 0.0


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def cell_step(w, x, h, c):
    """One cell update on a length-12 weight vector; returns ``(h', c')``."""
    g_f = _sigmoid(w[0] * x + w[1] * h + w[2])
    g_i = _sigmoid(w[3] * x + w[4] * h + w[5])
    x_d = _sigmoid(w[6] * x + w[7] * h + w[8])
    g_o = _sigmoid(w[9] * x + w[10] * h + w[11])
    c_new = g_f * c + g_i * x_d
    return g_o * math.tanh(c_new), c_new


def lstm_step(p: LstmParams, x: float, s: LstmState = LstmState()) -> LstmState:
    """Advance the cell by one step with scalar input ``x``."""
    h, c = cell_step(p.to_array(), float(x), float(s.h), float(s.c))
    return LstmState(h, c)
