"""Gradient-based input perturbations: fast gradient method and PGD."""
from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..workmeter import add_work
from .functional import one_hot, softmax
from .model import Model


def _as_onehot(model: Model, y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim <= 1 and y.size >= 1 and y.dtype.kind in "iu":
        return one_hot(y, model.class_count)
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[1] != model.class_count:
        raise InputError("label rows must match the model class count")
    return y


def input_gradient(model: Model, x: np.ndarray, y) -> np.ndarray:
    """Gradient of the mean cross-entropy loss with respect to the input."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == len(model.input_shape)
    if squeeze:
        x = x[None]
    target = _as_onehot(model, y)
    if len(target) != len(x):
        raise InputError("need one label per input")
    logits, caches = model.forward_cached(x)
    probs = softmax(logits)
    grad_in, _ = model.backward((probs - target) / len(x), caches)
    add_work(len(x) * 2)
    return grad_in[0] if squeeze else grad_in


def fgm(model: Model, x: np.ndarray, y, epsilon: float) -> np.ndarray:
    """x' = clip(x + epsilon * sign(grad_x H(y, f(x))), 0, 1).

    epsilon=0 returns the input unchanged (after the identity clip).
    """
    if epsilon < 0:
        raise InputError("epsilon must be >= 0")
    g = input_gradient(model, x, y)
    return np.clip(np.asarray(x, dtype=np.float64) + epsilon * np.sign(g), 0.0, 1.0)


def pgd(model: Model, x: np.ndarray, y, epsilon: float, step: float,
        max_iters: int = 40) -> np.ndarray:
    """Iterated FGM projected onto the L-infinity ball around x.

    Each iterate stays inside the input range [0, 1] and within
    max-norm epsilon of the starting point.
    """
    if epsilon < 0 or step < 0:
        raise InputError("epsilon and step must be >= 0")
    if step > epsilon:
        raise InputError("pgd step must not exceed epsilon")
    if max_iters < 1:
        raise InputError("max_iters must be >= 1")
    x0 = np.asarray(x, dtype=np.float64)
    adv = x0.copy()
    for _ in range(max_iters):
        g = input_gradient(model, adv, y)
        adv = np.clip(adv + step * np.sign(g), 0.0, 1.0)
        adv = np.clip(adv, x0 - epsilon, x0 + epsilon)
    return adv
