"""Parameter-encoding schemes that project mean filter weights.

Both schemes draw a secret random projection A of shape [bits, flat_dim] for
one target layer (the first parameterized layer by default) and shape the
projection of the mean filter during training:

  Uchida: adds lam * BCE(sigmoid(A @ wbar), message); a bit extracts as 1
      iff its projection coordinate is >= 0.
  DeepMarks: adds gamma * (1 - cos(A @ wbar, s)) where the signature s maps
      message bits {0,1} -> {-1,+1}; extraction reports the correlation,
      clamped to [0, 1] as the watermark accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigError, EmbeddingFailed, ExtractionUndefined
from ..nn.functional import binary_cross_entropy, logistic
from ..nn.layers import has_params
from ..nn.train import EarlyStopConfig, TrainConfig, fit
from ..rng import derive_seed, rng
from ..targets import white_box
from .base import Scheme, SchemeConfig, as_message

DEFAULT_BITS = 32


@dataclass
class ProjectionKey:
    scheme_id: str
    layer_index: int
    matrix: np.ndarray            # [bits, flat_dim]
    meta: dict[str, Any] = field(default_factory=dict)


def target_layer_index(model) -> int:
    """First parameterized layer; the canonical embedding site."""
    for i, layer in enumerate(model.layers):
        if has_params(layer):
            return i
    raise ConfigError("model has no parameterized layer")


def mean_filter(model, layer_index: int, flat_dim: int) -> np.ndarray:
    if not 0 <= layer_index < len(model.layers):
        raise ExtractionUndefined("target layer index out of range")
    layer = model.layers[layer_index]
    if not has_params(layer):
        raise ExtractionUndefined("target layer carries no parameters")
    filters = layer.filters()
    if filters.shape[1] != flat_dim:
        raise ExtractionUndefined(
            f"filter width {filters.shape[1]} does not match projection {flat_dim}")
    return filters.mean(axis=0)


def _default_train(cfg: SchemeConfig, seed: int) -> TrainConfig:
    base = cfg.train or TrainConfig(learning_rate=0.05, epochs=60, batch_size=16)
    early = base.early_stop or EarlyStopConfig(monitored_loss="combined", patience=5)
    return TrainConfig(learning_rate=base.learning_rate, epochs=base.epochs,
                       batch_size=base.batch_size, weight_decay=base.weight_decay,
                       early_stop=early, seed=derive_seed(seed, "embed"))


def _keygen_projection(scheme_id: str, cfg: SchemeConfig, model, seed: int):
    if model is None:
        raise ConfigError(f"{scheme_id} keygen needs the model for layer shapes")
    bits = int(cfg.param("key_length", DEFAULT_BITS))
    if bits < 1:
        raise ConfigError("key_length must be >= 1")
    layer_index = int(cfg.param("layer_index", target_layer_index(model)))
    layer = model.layers[layer_index]
    if not has_params(layer):
        raise ConfigError("target layer carries no parameters")
    flat_dim = layer.filters().shape[1]
    gen = rng(derive_seed(seed, scheme_id, "keygen"))
    matrix = gen.normal(0.0, 1.0, size=(bits, flat_dim))
    message = (gen.random(bits) < 0.5).astype(np.uint8)
    return ProjectionKey(scheme_id, layer_index, matrix), message


def _embed_with_regularizer(scheme, key, message, model, cfg, reg):
    """Fine-tune with an additive parameter regularizer until it plateaus."""
    if cfg.data is None or not cfg.data.labeled:
        raise ConfigError("embedding requires labeled defender data in cfg.data")
    train_cfg = _default_train(cfg, int(cfg.param("seed", 0)))
    marked = model.clone()
    fit(marked, cfg.data.images, cfg.data.labels, train_cfg,
        monitor=lambda m: reg(m)[0], extra_param_grads=reg)
    acc = scheme.watermark_accuracy(key, message, marked)
    if acc < 1.0:
        raise EmbeddingFailed(
            f"{scheme.scheme_id}: watermark accuracy {acc:.3f} after budget", acc,
            marked)
    return marked


class UchidaScheme(Scheme):
    scheme_id = "uchida"
    category = "parameter_encoding"
    requires_model_for_keygen = True

    def keygen(self, cfg, data, model, seed):
        return _keygen_projection(self.scheme_id, cfg, model, seed)

    def embed(self, key, message, model, cfg):
        lam = float(cfg.param("lam", 1.0))
        if lam < 0:
            raise ConfigError("lam must be >= 0")
        message = as_message(message)
        A = key.matrix
        bits = A.shape[0]

        def reg(m):
            layer = m.layers[key.layer_index]
            filters = layer.filters()
            wbar = filters.mean(axis=0)
            p = logistic(A @ wbar)
            loss = lam * binary_cross_entropy(p, message)
            g_wbar = lam * (A.T @ (p - message)) / bits
            g_filters = np.tile(g_wbar / filters.shape[0], (filters.shape[0], 1))
            return loss, {key.layer_index: (g_filters.reshape(layer.W.shape), None)}

        return _embed_with_regularizer(self, key, message, model, cfg, reg)

    def extract(self, key, target):
        model = white_box(target)
        wbar = mean_filter(model, key.layer_index, key.matrix.shape[1])
        return (key.matrix @ wbar >= 0.0).astype(np.uint8)


def signature_of(message: np.ndarray) -> np.ndarray:
    """Map bits {0,1} to a {-1,+1} signature vector."""
    return as_message(message).astype(np.float64) * 2.0 - 1.0


def correlation(v: np.ndarray, s: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector is all zeros."""
    nv = float(np.linalg.norm(v))
    ns = float(np.linalg.norm(s))
    if nv == 0.0 or ns == 0.0:
        return 0.0
    return float(np.dot(v, s) / (nv * ns))


class DeepMarksScheme(Scheme):
    scheme_id = "deepmarks"
    category = "parameter_encoding"
    requires_model_for_keygen = True

    def keygen(self, cfg, data, model, seed):
        return _keygen_projection(self.scheme_id, cfg, model, seed)

    def embed(self, key, message, model, cfg):
        gamma = float(cfg.param("gamma", 1.0))
        if gamma < 0:
            raise ConfigError("gamma must be >= 0")
        message = as_message(message)
        A = key.matrix
        s = signature_of(message)

        def reg(m):
            layer = m.layers[key.layer_index]
            filters = layer.filters()
            wbar = filters.mean(axis=0)
            v = A @ wbar
            nv = float(np.linalg.norm(v))
            ns = float(np.linalg.norm(s))
            if nv == 0.0:
                return gamma, {}
            cos = float(np.dot(v, s) / (nv * ns))
            loss = gamma * (1.0 - cos)
            dcos_dv = s / (nv * ns) - v * (np.dot(v, s) / (nv ** 3 * ns))
            g_wbar = -gamma * (A.T @ dcos_dv)
            g_filters = np.tile(g_wbar / filters.shape[0], (filters.shape[0], 1))
            return loss, {key.layer_index: (g_filters.reshape(layer.W.shape), None)}

        marked = model.clone()
        if cfg.data is None or not cfg.data.labeled:
            raise ConfigError("embedding requires labeled defender data in cfg.data")
        train_cfg = _default_train(cfg, int(cfg.param("seed", 0)))
        fit(marked, cfg.data.images, cfg.data.labels, train_cfg,
            monitor=lambda m: reg(m)[0], extra_param_grads=reg)
        acc = self.watermark_accuracy(key, message, marked)
        if acc < 1.0:
            raise EmbeddingFailed(
                f"deepmarks: watermark accuracy {acc:.3f} after budget", acc,
                marked)
        return marked

    def extract(self, key, target):
        """Sign-thresholded projection bits (uniform message interface)."""
        model = white_box(target)
        wbar = mean_filter(model, key.layer_index, key.matrix.shape[1])
        return (key.matrix @ wbar >= 0.0).astype(np.uint8)

    def correlation_accuracy(self, key, message, target) -> float:
        """Signature correlation clamped to [0, 1]; 0 when undefined.

        A correlation <= 0 maps to accuracy zero. Verification and the
        evaluation pipeline use the uniform bitwise agreement instead.
        """
        try:
            model = white_box(target)
            wbar = mean_filter(model, key.layer_index, key.matrix.shape[1])
        except ExtractionUndefined:
            return 0.0
        rho = correlation(key.matrix @ wbar, signature_of(message))
        return float(np.clip(rho, 0.0, 1.0))
