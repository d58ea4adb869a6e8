"""Model-independent trigger-set schemes: Adi, Content, Noise, Unrelated.

Each scheme hides a small secret set of (image, label) pairs that the marked
model is fine-tuned to answer; extraction replays the queries and reports one
bit per key image. The reference message is all ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..data import Dataset, generate_unrelated, merge
from ..errors import ConfigError, EmbeddingFailed, InputError
from ..nn.functional import cross_entropy, one_hot, softmax
from ..nn.train import EarlyStopConfig, TrainConfig, fit
from ..rng import derive_seed, rng
from ..targets import predict_probs
from .base import Scheme, SchemeConfig, message_of_ones

DEFAULT_KEY_LENGTH = 32
DEFAULT_KEY_REPEATS = 4


@dataclass
class TriggerKey:
    scheme_id: str
    images: np.ndarray            # [n, 1, h, w]
    labels: np.ndarray            # [n, class_count] one-hot
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise InputError("key images and labels must align")
        if len(self.images) == 0:
            raise InputError("key must contain at least one trigger")


def default_embed_train(cfg: SchemeConfig, seed: int) -> TrainConfig:
    base = cfg.train or TrainConfig(learning_rate=0.05, epochs=60, batch_size=16)
    early = base.early_stop or EarlyStopConfig(monitored_loss="watermark", patience=5)
    return TrainConfig(learning_rate=base.learning_rate, epochs=base.epochs,
                       batch_size=base.batch_size, weight_decay=base.weight_decay,
                       early_stop=early, seed=derive_seed(seed, "embed"))


def embed_triggers(scheme: Scheme, key: TriggerKey, message: np.ndarray, model,
                   cfg: SchemeConfig):
    """Fine-tune on task data plus repeated trigger samples.

    Stops when the watermark loss plateaus; the marked model must answer
    every trigger correctly or embedding fails.
    """
    if cfg.data is None or not cfg.data.labeled:
        raise ConfigError("embedding requires labeled defender data in cfg.data")
    repeats = int(cfg.param("key_repeats", DEFAULT_KEY_REPEATS))
    train_cfg = default_embed_train(cfg, int(cfg.param("seed", 0)))
    key_set = Dataset(key.images, key.labels, model.class_count)
    combined = merge(Dataset(cfg.data.images, cfg.data.labels, model.class_count),
                     Dataset(np.tile(key.images, (repeats, 1, 1, 1)),
                             np.tile(key.labels, (repeats, 1)), model.class_count))

    def watermark_loss(m) -> float:
        return cross_entropy(key_set.labels, softmax(m.forward(key_set.images)))

    marked = model.clone()
    fit(marked, combined.images, combined.labels, train_cfg, monitor=watermark_loss)
    acc = scheme.watermark_accuracy(key, message, marked)
    if acc < 1.0:
        raise EmbeddingFailed(
            f"{scheme.scheme_id}: watermark accuracy {acc:.3f} after budget", acc,
            marked)
    return marked


def extract_triggers(key: TriggerKey, target) -> np.ndarray:
    preds = predict_probs(target, key.images)
    want = np.argmax(key.labels, axis=1)
    return (np.argmax(preds, axis=1) == want).astype(np.uint8)


def _key_length(cfg: SchemeConfig) -> int:
    n = int(cfg.param("key_length", DEFAULT_KEY_LENGTH))
    if n < 1:
        raise ConfigError("key_length must be >= 1")
    return n


def _pick_source_class(gen: np.random.Generator, class_count: int) -> int:
    return int(gen.integers(0, class_count))


def _pick_target(gen: np.random.Generator, class_count: int, exclude: int | None) -> int:
    choices = [c for c in range(class_count) if c != exclude]
    return int(choices[gen.integers(0, len(choices))])


def _source_samples(data: Dataset, source: int, n: int,
                    gen: np.random.Generator) -> np.ndarray:
    idx = np.flatnonzero(data.label_indices() == source)
    if idx.size == 0:
        raise ConfigError(f"no samples of source class {source} available")
    pick = gen.choice(idx, size=n, replace=idx.size < n)
    return data.images[pick].copy()


class AdiScheme(Scheme):
    """Out-of-distribution abstract images, each with its own random label."""

    scheme_id = "adi"
    category = "model_independent"

    def keygen(self, cfg, data, model, seed):
        if data is None or not data.labeled:
            raise ConfigError("adi keygen needs the labeled defender data")
        n = _key_length(cfg)
        gen = rng(derive_seed(seed, "adi"))
        images = generate_unrelated(derive_seed(seed, "adi-images"), n,
                                    image_size=data.images.shape[2],
                                    style="tiles").images
        labels = one_hot(gen.integers(0, data.class_count, size=n), data.class_count)
        key = TriggerKey(self.scheme_id, images, labels)
        return key, message_of_ones(n)

    def embed(self, key, message, model, cfg):
        return embed_triggers(self, key, message, model, cfg)

    def extract(self, key, target):
        return extract_triggers(key, target)


class ContentScheme(Scheme):
    """Source-class images stamped with a white square, one target class."""

    scheme_id = "content"
    category = "model_independent"

    def keygen(self, cfg, data, model, seed):
        if data is None or not data.labeled:
            raise ConfigError("content keygen needs the labeled defender data")
        n = _key_length(cfg)
        size = int(cfg.param("mask_size", 2))
        h = data.images.shape[2]
        if not 1 <= size <= h:
            raise ConfigError("mask_size must fit inside the image")
        gen = rng(derive_seed(seed, "content"))
        source = _pick_source_class(gen, data.class_count)
        target = _pick_target(gen, data.class_count, exclude=source)
        images = _source_samples(data, source, n, gen)
        images[:, :, :size, :size] = 1.0
        labels = one_hot(np.full(n, target), data.class_count)
        key = TriggerKey(self.scheme_id, images, labels,
                         meta={"mask": "square", "mask_size": size,
                               "source_class": source, "target_class": target})
        return key, message_of_ones(n)

    def embed(self, key, message, model, cfg):
        return embed_triggers(self, key, message, model, cfg)

    def extract(self, key, target):
        return extract_triggers(key, target)


class NoiseScheme(Scheme):
    """Source-class images plus one shared additive Gaussian mask."""

    scheme_id = "noise"
    category = "model_independent"

    def keygen(self, cfg, data, model, seed):
        if data is None or not data.labeled:
            raise ConfigError("noise keygen needs the labeled defender data")
        n = _key_length(cfg)
        sigma = float(cfg.param("sigma", 0.4))
        if sigma <= 0:
            raise ConfigError("sigma must be > 0")
        gen = rng(derive_seed(seed, "noise"))
        source = _pick_source_class(gen, data.class_count)
        target = _pick_target(gen, data.class_count, exclude=source)
        mask = gen.normal(0.0, sigma, size=data.images.shape[1:])
        images = np.clip(_source_samples(data, source, n, gen) + mask, 0.0, 1.0)
        labels = one_hot(np.full(n, target), data.class_count)
        key = TriggerKey(self.scheme_id, images, labels,
                         meta={"mask": "gaussian", "sigma": sigma,
                               "mask_values": mask, "source_class": source,
                               "target_class": target})
        return key, message_of_ones(n)

    def embed(self, key, message, model, cfg):
        return embed_triggers(self, key, message, model, cfg)

    def extract(self, key, target):
        return extract_triggers(key, target)


class UnrelatedScheme(Scheme):
    """Images from an unrelated domain, all labeled with one target class."""

    scheme_id = "unrelated"
    category = "model_independent"

    def keygen(self, cfg, data, model, seed):
        if data is None or not data.labeled:
            raise ConfigError("unrelated keygen needs the labeled defender data")
        n = _key_length(cfg)
        gen = rng(derive_seed(seed, "unrelated"))
        target = _pick_target(gen, data.class_count, exclude=None)
        images = generate_unrelated(derive_seed(seed, "unrelated-images"), n,
                                    image_size=data.images.shape[2],
                                    style="strokes").images
        labels = one_hot(np.full(n, target), data.class_count)
        key = TriggerKey(self.scheme_id, images, labels,
                         meta={"target_class": target})
        return key, message_of_ones(n)

    def embed(self, key, message, model, cfg):
        return embed_triggers(self, key, message, model, cfg)

    def extract(self, key, target):
        return extract_triggers(key, target)
