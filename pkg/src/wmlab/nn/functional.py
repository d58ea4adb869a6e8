"""Numerical primitives: softmax, cross-entropy, one-hot encoding."""
from __future__ import annotations

import numpy as np

from ..errors import DimensionError, InputError

_EPS = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow stability.

    Accepts [batch, K] or a single [K] row; rows of the result sum to one.
    """
    z = np.asarray(logits, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    if z.ndim != 2:
        raise DimensionError(f"softmax expects [batch, K] or [K], got shape {z.shape}")
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    return p[0] if single else p


def one_hot(labels: np.ndarray | int, class_count: int) -> np.ndarray:
    """One-hot rows for integer class labels."""
    idx = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if idx.ndim != 1:
        raise DimensionError(f"one_hot expects a label vector, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= class_count):
        raise InputError("label index outside [0, class_count)")
    out = np.zeros((idx.size, class_count), dtype=np.float64)
    out[np.arange(idx.size), idx] = 1.0
    return out


def cross_entropy(y: np.ndarray, probs: np.ndarray) -> float:
    """Mean cross-entropy H(y, p) = -sum_i y_i log p_i over the batch.

    `y` may be one-hot or any soft distribution; `probs` rows must be valid
    distributions over the same class count. Probabilities are clamped below
    at a tiny epsilon so a zero probability on a supported class yields a
    large finite loss instead of inf.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    if y.shape != p.shape:
        raise DimensionError(f"cross_entropy shape mismatch: {y.shape} vs {p.shape}")
    return float(-(y * np.log(np.clip(p, _EPS, None))).sum(axis=1).mean())


def logistic(z: np.ndarray) -> np.ndarray:
    """Elementwise sigmoid, numerically stable on both tails."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def binary_cross_entropy(p: np.ndarray, targets: np.ndarray) -> float:
    """Mean BCE between probabilities p and 0/1 targets."""
    p = np.clip(np.asarray(p, dtype=np.float64), _EPS, 1.0 - _EPS)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise DimensionError(f"binary_cross_entropy shape mismatch: {p.shape} vs {t.shape}")
    return float(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)).mean())
