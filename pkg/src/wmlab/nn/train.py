"""Plain SGD training with optional L2 weight decay and early stopping."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ..errors import ConfigError, InputError
from ..rng import derive_seed, rng
from ..workmeter import add_work
from .functional import cross_entropy, softmax
from .model import Model

MONITORED_LOSSES = ("task", "watermark", "combined")


@dataclass
class EarlyStopConfig:
    """Stop when the monitored loss fails to improve `patience` checks in a row.

    check_every counts batches; 0 means one check per epoch.
    """

    monitored_loss: str = "task"
    patience: int = 5
    check_every: int = 0

    def __post_init__(self):
        if self.monitored_loss not in MONITORED_LOSSES:
            raise ConfigError(f"monitored_loss must be one of {MONITORED_LOSSES}")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.check_every < 0:
            raise ConfigError("check_every must be >= 0")


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 20
    batch_size: int = 16
    weight_decay: float = 0.0
    early_stop: EarlyStopConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")

    def scaled(self, factor: float) -> "TrainConfig":
        ep = max(1, round(self.epochs * factor)) if self.epochs > 0 else 0
        return replace(self, epochs=ep)


class _EarlyStopper:
    def __init__(self, cfg: EarlyStopConfig):
        self.cfg = cfg
        self.best = np.inf
        self.misses = 0
        self.stopped = False

    def check(self, value: float) -> bool:
        """Record one monitored value; returns True when training must stop."""
        if value < self.best:
            self.best = value
            self.misses = 0
        else:
            self.misses += 1
        if self.misses >= self.cfg.patience:
            self.stopped = True
        return self.stopped


def fit(model: Model, images: np.ndarray, labels: np.ndarray, cfg: TrainConfig, *,
        monitor: Callable[[Model], float] | None = None,
        extra_param_grads: Callable[[Model], tuple[float, dict]] | None = None,
        periodic: tuple[int, Callable[[Model], None]] | None = None,
        frozen_layers: tuple[int, ...] = (),
        lr_for_epoch: Callable[[int], float] | None = None,
        max_batches: int | None = None) -> Model:
    """Run SGD over (images, labels) in place and return the model.

    monitor: value used by early stopping when monitored_loss != "task"
        (for "combined" its value is added to the running task loss).
    extra_param_grads: per-batch additive loss term; returns (loss_value,
        {layer_index: (dW, db_or_None)}) added to the task gradients.
    periodic: (period, hook); the hook runs after every `period` batches and
        may update the model in place (used for alternating schedules).
    """
    n = len(images)
    if n == 0:
        raise InputError("cannot train on an empty dataset")
    if labels is None:
        raise InputError("training requires labels")
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if len(labels) != n:
        raise InputError("images and labels must have matching length")

    stopper = _EarlyStopper(cfg.early_stop) if cfg.early_stop is not None else None
    if stopper is not None and cfg.early_stop.monitored_loss != "task" and monitor is None:
        raise ConfigError("non-task monitored loss requires a monitor callable")

    frozen = set(frozen_layers)
    check_every = cfg.early_stop.check_every if cfg.early_stop else 0
    batches_seen = 0
    since_check = 0

    def monitored_value(epoch_task_mean: float) -> float:
        mode = cfg.early_stop.monitored_loss
        if mode == "task":
            return epoch_task_mean
        if mode == "watermark":
            return monitor(model)
        return epoch_task_mean + monitor(model)

    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate if lr_for_epoch is None else lr_for_epoch(epoch)
        order = rng(derive_seed(cfg.seed, "epoch", epoch)).permutation(n)
        epoch_loss = 0.0
        epoch_batches = 0
        stop = False
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            bx, by = images[idx], labels[idx]
            logits, caches = model.forward_cached(bx)
            probs = softmax(logits)
            loss = cross_entropy(by, probs)
            _, grads = model.backward((probs - by) / len(idx), caches)
            if extra_param_grads is not None:
                extra_loss, extra = extra_param_grads(model)
                loss += extra_loss
                for li, (gw, gb) in extra.items():
                    if li in grads:
                        gw0, gb0 = grads[li]
                        grads[li] = (gw0 + gw, gb0 if gb is None else gb0 + gb)
                    else:
                        layer = model.layers[li]
                        grads[li] = (gw, np.zeros_like(layer.b) if gb is None else gb)
            for li, (gw, gb) in grads.items():
                if li in frozen:
                    continue
                layer = model.layers[li]
                if cfg.weight_decay:
                    gw = gw + cfg.weight_decay * layer.W
                layer.W = layer.W - lr * gw
                layer.b = layer.b - lr * gb
            add_work(len(idx) * 2)
            epoch_loss += loss
            epoch_batches += 1
            batches_seen += 1
            since_check += 1
            if periodic is not None and batches_seen % periodic[0] == 0:
                periodic[1](model)
            if stopper is not None and check_every and since_check >= check_every:
                since_check = 0
                if stopper.check(monitored_value(epoch_loss / epoch_batches)):
                    stop = True
                    break
            if max_batches is not None and batches_seen >= max_batches:
                stop = True
                break
        if epoch_batches:
            model.loss_history.append(epoch_loss / epoch_batches)
        if stop:
            break
        if stopper is not None and not check_every:
            if stopper.check(monitored_value(epoch_loss / epoch_batches)):
                break
    return model


def train(model: Model, data, cfg: TrainConfig) -> Model:
    """Train a copy of the model on a labeled dataset and return it.

    epochs=0 or learning_rate=0 returns a parameter-identical copy.
    """
    if getattr(data, "labels", None) is None:
        raise InputError("train requires labeled data")
    out = model.clone()
    if cfg.epochs == 0 or cfg.learning_rate == 0.0:
        return out
    if cfg.early_stop is not None and cfg.early_stop.monitored_loss != "task":
        raise ConfigError("train monitors the task loss; use fit for custom monitors")
    return fit(out, data.images, data.labels, cfg)
