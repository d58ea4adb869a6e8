"""Common scheme interface: keygen / embed / extract / verify.

Messages are 0/1 uint8 vectors. Zero-bit trigger schemes use the all-ones
reference message; each extracted bit indicates that the target answers one
key query as expected. Multi-bit parameter schemes carry a random message.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..data import Dataset
from ..errors import ConfigError, ExtractionUndefined, InputError
from ..nn.train import TrainConfig

CATEGORIES = ("model_independent", "model_dependent", "parameter_encoding", "active")


def message_of_ones(n: int) -> np.ndarray:
    return np.ones(n, dtype=np.uint8)


def as_message(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise InputError("message must be a flat bit vector")
    if arr.size == 0:
        raise InputError("message must contain at least one bit")
    if not np.isin(arr, (0, 1)).all():
        raise InputError("message entries must be 0 or 1")
    return arr.astype(np.uint8)


def message_to_str(bits: np.ndarray) -> str:
    return "".join(str(int(b)) for b in bits)


def message_from_str(s: str) -> np.ndarray:
    if not s or any(ch not in "01" for ch in s):
        raise InputError("message string must be non-empty and contain only 0/1")
    return np.array([int(ch) for ch in s], dtype=np.uint8)


@dataclass
class SchemeConfig:
    """Scheme parameters plus the embedding budget and defender data."""

    params: dict[str, Any] = field(default_factory=dict)
    train: TrainConfig | None = None
    data: Dataset | None = None

    def param(self, name: str, default):
        return self.params.get(name, default)


@dataclass
class VerifyResult:
    retained: bool
    watermark_accuracy: float


class Scheme(ABC):
    scheme_id: str = ""
    category: str = ""
    requires_model_for_keygen: bool = False

    @abstractmethod
    def keygen(self, cfg: SchemeConfig, data: Dataset | None, model, seed: int):
        """Generate (key, message) for this scheme."""

    @abstractmethod
    def embed(self, key, message: np.ndarray, model, cfg: SchemeConfig):
        """Return a marked copy of the model (the input is never mutated)."""

    @abstractmethod
    def extract(self, key, target) -> np.ndarray:
        """Extract the message bits carried by the target."""

    def deploy(self, model, key):
        """Deployment-time view of the marked model (identity by default)."""
        return model

    def watermark_accuracy(self, key, message: np.ndarray, target) -> float:
        """Fraction of extracted bits matching the message; 0 if undefined."""
        try:
            extracted = self.extract(key, target)
        except ExtractionUndefined:
            return 0.0
        message = as_message(message)
        if len(extracted) != len(message):
            return 0.0
        return float(np.mean(extracted.astype(np.uint8) == message))

    def verify(self, key, message: np.ndarray, target, theta: float) -> VerifyResult:
        d = self.watermark_accuracy(key, message, target)
        return VerifyResult(retained=bool(d >= theta), watermark_accuracy=d)


def check_class_count(cfg_value: int) -> int:
    if cfg_value < 2:
        raise ConfigError("schemes need a task with at least two classes")
    return cfg_value
