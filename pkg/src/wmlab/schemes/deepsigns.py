"""DeepSigns (single-Gaussian form): bits carried by hidden activations.

A secret projection G maps the mean first-hidden-layer activation of a
source-class carrier batch to message bits via sigmoid thresholding. The
statistic is taken before the nonlinearity: rectified units that fall
silent on the carrier batch would block the embedding gradient entirely,
while the linear map underneath always stays trainable. Embedding
alternates two task batches with one embedding step that pushes the
carrier batch mean toward the message; extraction replays the carriers
and thresholds G @ mu.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigError, EmbeddingFailed, ExtractionUndefined
from ..nn.functional import binary_cross_entropy, logistic
from ..nn.model import hidden_activation_index
from ..nn.train import EarlyStopConfig, TrainConfig, fit
from ..rng import derive_seed, rng
from ..targets import white_box
from .base import Scheme, SchemeConfig
from .projection import DEFAULT_BITS

DEFAULT_CARRIERS = 24


@dataclass
class ActivationKey:
    scheme_id: str
    layer_index: int              # layer whose output carries the bits
    matrix: np.ndarray            # [bits, activation_dim]
    source_class: int
    carriers: np.ndarray          # [n, 1, h, w]
    meta: dict[str, Any] = field(default_factory=dict)


def _carrier_mean_activation(model, key: ActivationKey) -> np.ndarray:
    if not 0 <= key.layer_index < len(model.layers):
        raise ExtractionUndefined("activation layer index out of range")
    acts, _ = model.forward_to(key.layer_index, key.carriers)
    acts = acts.reshape(len(key.carriers), -1)
    if acts.shape[1] != key.matrix.shape[1]:
        raise ExtractionUndefined(
            f"activation width {acts.shape[1]} does not match projection "
            f"{key.matrix.shape[1]}")
    return acts.mean(axis=0)


class DeepSignsScheme(Scheme):
    scheme_id = "deepsigns"
    category = "parameter_encoding"
    requires_model_for_keygen = True

    def keygen(self, cfg, data, model, seed):
        if model is None:
            raise ConfigError("deepsigns keygen needs the model for layer shapes")
        if data is None or not data.labeled:
            raise ConfigError("deepsigns keygen needs the labeled defender data")
        bits = int(cfg.param("key_length", DEFAULT_BITS))
        if bits < 1:
            raise ConfigError("key_length must be >= 1")
        n_carriers = int(cfg.param("carrier_count", DEFAULT_CARRIERS))
        gen = rng(derive_seed(seed, "deepsigns"))
        source = int(gen.integers(0, data.class_count))
        idx = np.flatnonzero(data.label_indices() == source)
        if idx.size == 0:
            raise ConfigError(f"no samples of source class {source} available")
        pick = gen.choice(idx, size=n_carriers, replace=idx.size < n_carriers)
        carriers = data.images[pick].copy()
        # pre-activation of the first hidden nonlinearity
        layer_index = hidden_activation_index(model) - 1
        if layer_index < 0:
            raise ConfigError("model has no layer below its hidden activation")
        acts, _ = model.forward_to(layer_index, carriers[:1])
        act_dim = int(acts.reshape(1, -1).shape[1])
        matrix = gen.normal(0.0, 1.0, size=(bits, act_dim))
        message = (gen.random(bits) < 0.5).astype(np.uint8)
        key = ActivationKey(self.scheme_id, layer_index, matrix, source, carriers)
        return key, message

    def embed(self, key, message, model, cfg):
        if cfg.data is None or not cfg.data.labeled:
            raise ConfigError("embedding requires labeled defender data in cfg.data")
        base = cfg.train or TrainConfig(learning_rate=0.05, epochs=60, batch_size=16)
        early = base.early_stop or EarlyStopConfig(monitored_loss="combined", patience=5)
        train_cfg = TrainConfig(learning_rate=base.learning_rate, epochs=base.epochs,
                                batch_size=base.batch_size,
                                weight_decay=base.weight_decay, early_stop=early,
                                seed=derive_seed(int(cfg.param("seed", 0)), "embed"))
        embed_lr = float(cfg.param("embed_lr", base.learning_rate))
        bits = len(message)
        G = key.matrix
        target = np.asarray(message, dtype=np.float64)

        def embed_loss(m) -> float:
            mu = _carrier_mean_activation(m, key)
            return binary_cross_entropy(logistic(G @ mu), target)

        def embed_step(m) -> None:
            # one SGD step on BCE(sigmoid(G mu), message) through the carriers
            acts, caches = m.forward_to(key.layer_index, key.carriers)
            flat = acts.reshape(len(key.carriers), -1)
            mu = flat.mean(axis=0)
            p = logistic(G @ mu)
            d_mu = (G.T @ (p - target)) / bits
            d_acts = np.tile(d_mu / len(key.carriers), (len(key.carriers), 1))
            d_acts = d_acts.reshape(acts.shape)
            _, grads = m.backward(d_acts, caches, upto=key.layer_index)
            for li, (gw, gb) in grads.items():
                layer = m.layers[li]
                layer.W = layer.W - embed_lr * gw
                layer.b = layer.b - embed_lr * gb

        marked = model.clone()
        fit(marked, cfg.data.images, cfg.data.labels, train_cfg,
            monitor=embed_loss, periodic=(2, embed_step))
        # the task batches fight the carrier statistics, so the alternating
        # phase can settle short of the message; finish with embedding-only
        # steps until every bit clears a sigmoid margin
        polish_budget = int(cfg.param("polish_steps", 2000))
        for _ in range(polish_budget):
            p = logistic(G @ _carrier_mean_activation(marked, key))
            if np.all((p >= 0.5) == (target >= 0.5)) and np.all(np.abs(2 * p - 1) >= 0.2):
                break
            embed_step(marked)
        acc = self.watermark_accuracy(key, message, marked)
        if acc < 1.0:
            raise EmbeddingFailed(
                f"deepsigns: watermark accuracy {acc:.3f} after budget", acc,
                marked)
        return marked

    def extract(self, key, target):
        model = white_box(target)
        mu = _carrier_mean_activation(model, key)
        return (logistic(key.matrix @ mu) >= 0.5).astype(np.uint8)
