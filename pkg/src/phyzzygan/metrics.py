"""Regression metrics on [0, 1]-normalized remaining life."""
import numpy as np


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("metrics need at least one sample")
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.size} labels vs {y_hat.size} predictions")
    return y, y_hat


def mae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def mse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))
