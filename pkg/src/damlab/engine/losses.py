"""Scalar losses with analytic gradients.

Every loss returns ``(value, grad)`` where ``grad`` has the shape of the
prediction.  Conventions:

* ``loss_mse``        mean over rows (samples), sum over columns.
* ``loss_frobenius``  plain sum of squared entries, no normalization.
* ``loss_bce``        mean over rows, sum over columns; inputs must lie in (0, 1).
* ``loss_softmax_ce`` mean over rows; labels are integer class indices.
"""

import numpy as np

from ..errors import DimensionError, DomainError

__all__ = ["loss_mse", "loss_frobenius", "loss_bce", "loss_softmax_ce"]


def _check_shapes(name, pred, target):
    if pred.shape != target.shape:
        raise DimensionError(f"{name}: prediction shape {pred.shape} != target shape {target.shape}")


def loss_mse(pred: np.ndarray, target: np.ndarray):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_shapes("loss_mse", pred, target)
    batch = pred.shape[0]
    diff = pred - target
    return float(np.sum(diff * diff) / batch), (2.0 / batch) * diff


def loss_frobenius(pred: np.ndarray, target: np.ndarray):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_shapes("loss_frobenius", pred, target)
    diff = pred - target
    return float(np.sum(diff * diff)), 2.0 * diff


def loss_bce(pred: np.ndarray, target: np.ndarray):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_shapes("loss_bce", pred, target)
    if np.any(pred <= 0.0) or np.any(pred >= 1.0):
        raise DomainError("loss_bce: predictions must lie strictly inside (0, 1)")
    batch = pred.shape[0]
    value = -np.sum(target * np.log(pred) + (1.0 - target) * np.log1p(-pred)) / batch
    grad = (-target / pred + (1.0 - target) / (1.0 - pred)) / batch
    return float(value), grad


def loss_softmax_ce(logits: np.ndarray, labels: np.ndarray):
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise DimensionError(
            f"loss_softmax_ce: logits shape {logits.shape} incompatible with labels shape {labels.shape}")
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    rows = np.arange(batch)
    value = -np.mean(shifted[rows, labels] - np.log(exp.sum(axis=1)))
    grad = probs.copy()
    grad[rows, labels] -= 1.0
    return float(value), grad / batch
