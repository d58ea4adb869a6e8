"""Query access wrappers used by attacks.

QueryOracle is the only interface black-box extraction strategies receive:
it counts queries and deliberately hides the underlying parameters.
PreprocessedModel is the deployment artifact of an input-preprocessing
attack: the stolen model served behind an input filter (white-box for its
owner, so parameter-encoded watermarks still read through it).
"""
from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..workmeter import add_work
from ..targets import predict_probs


class QueryOracle:
    def __init__(self, target, max_queries: int | None = None):
        self._target = target
        self.queries = 0
        self.max_queries = max_queries

    def query(self, images: np.ndarray) -> np.ndarray:
        n = len(images)
        if self.max_queries is not None and self.queries + n > self.max_queries:
            raise InputError(f"query budget of {self.max_queries} exhausted")
        self.queries += n
        add_work(n)
        return predict_probs(self._target, images)

    @property
    def class_count(self) -> int:
        target = self._target
        while not hasattr(target, "class_count"):
            target = target.model
        return target.class_count


class PreprocessedModel:
    """A model deployed behind an input-preprocessing filter."""

    def __init__(self, model, method: str, params: dict):
        from .preprocessing import preprocess_batch  # avoid import cycle
        self.model = model
        self.method = method
        self.params = dict(params)
        self._apply = lambda imgs: preprocess_batch(imgs, method, self.params)

    @property
    def class_count(self) -> int:
        return self.model.class_count

    def predict_probs(self, images: np.ndarray) -> np.ndarray:
        from ..nn.functional import softmax
        return softmax(self.model.forward(self._apply(np.asarray(images, float))))

    def predict_labels(self, images: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_probs(images), axis=1)
