"""Elementwise activations and their analytic derivatives."""

import numpy as np

from ..errors import DomainError

__all__ = ["ACTIVATION_KINDS", "activation_forward", "activation_backward"]

ACTIVATION_KINDS = ("identity", "relu", "leaky_relu", "elu", "tanh", "sigmoid", "sine")


def _check_finite(kind, x):
    if not np.all(np.isfinite(x)):
        raise DomainError(f"non-finite input to activation '{kind}'")


def _stable_sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation_forward(kind: str, x: np.ndarray, slope: float = 0.01,
                       elu_alpha: float = 1.0) -> np.ndarray:
    """Apply activation ``kind`` elementwise."""
    x = np.asarray(x, dtype=np.float64)
    _check_finite(kind, x)
    if kind == "identity":
        return x.copy()
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "leaky_relu":
        return np.where(x > 0, x, slope * x)
    if kind == "elu":
        return np.where(x > 0, x, elu_alpha * np.expm1(np.minimum(x, 0.0)))
    if kind == "tanh":
        return np.tanh(x)
    if kind == "sigmoid":
        return _stable_sigmoid(x)
    if kind == "sine":
        return np.sin(x)
    raise DomainError(f"unknown activation kind '{kind}'")


def activation_backward(kind: str, x: np.ndarray, upstream: np.ndarray,
                        slope: float = 0.01, elu_alpha: float = 1.0) -> np.ndarray:
    """Upstream gradient times the analytic derivative at the cached input ``x``.

    Kinked activations (relu, leaky_relu at 0) use the derivative of the
    inactive branch at the kink itself.
    """
    x = np.asarray(x, dtype=np.float64)
    if kind == "identity":
        return upstream.copy()
    if kind == "relu":
        return upstream * (x > 0)
    if kind == "leaky_relu":
        return upstream * np.where(x > 0, 1.0, slope)
    if kind == "elu":
        return upstream * np.where(x > 0, 1.0, elu_alpha * np.exp(np.minimum(x, 0.0)))
    if kind == "tanh":
        t = np.tanh(x)
        return upstream * (1.0 - t * t)
    if kind == "sigmoid":
        s = _stable_sigmoid(x)
        return upstream * s * (1.0 - s)
    if kind == "sine":
        return upstream * np.cos(x)
    raise DomainError(f"unknown activation kind '{kind}'")
