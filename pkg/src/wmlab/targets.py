"""Uniform access to verification targets.

A target may be a raw Model (white-box), a deployment wrapper around one
(input preprocessing, active-response postprocessing), or a pure query
oracle. Prediction-based extraction works on any of them; parameter-based
extraction needs to reach actual weights and fails otherwise.
"""
from __future__ import annotations

import numpy as np

from .errors import ExtractionUndefined
from .nn.model import Model


def predict_probs(target, images: np.ndarray) -> np.ndarray:
    """Class-probability rows for a batch, via whatever interface exists."""
    fn = getattr(target, "predict_probs", None)
    if fn is None:
        fn = getattr(target, "query", None)
    if fn is None:
        raise ExtractionUndefined(f"target {type(target).__name__} is not queryable")
    return fn(np.asarray(images, dtype=np.float64))


def white_box(target) -> Model:
    """Unwrap to the underlying Model; raises when only query access exists."""
    seen = 0
    while not isinstance(target, Model):
        inner = getattr(target, "model", None)
        if inner is None or seen > 8:
            raise ExtractionUndefined(
                f"no white-box parameters behind {type(target).__name__}")
        target = inner
        seen += 1
    return target


def maybe_white_box(target) -> Model | None:
    try:
        return white_box(target)
    except ExtractionUndefined:
        return None
