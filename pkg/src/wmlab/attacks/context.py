"""Shared state handed to every attack invocation.

The context fixes the attacker's training recipe, seeds and auxiliary data so
a whole evaluation grid can run attacks uniformly. All randomness derives
from ctx.seed; two contexts with equal fields produce identical attacks.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..data import Dataset
from ..errors import AttackInfeasible
from ..nn.model import Model, build_model
from ..nn.train import TrainConfig, fit
from ..rng import derive_seed


@dataclass
class AttackOutcome:
    """What an attack produced: the surrogate plus cost accounting."""

    surrogate: object
    runtime_seconds: float = 0.0
    queries_made: int = 0

    def __post_init__(self):
        if self.runtime_seconds < 0:
            raise ValueError("runtime_seconds must be >= 0")
        if self.queries_made < 0:
            raise ValueError("queries_made must be >= 0")


@dataclass
class AttackContext:
    train: TrainConfig
    seed: int
    epoch_multiplier: float = 1.0
    architecture: str = "dense_h32"
    alt_architecture: str = "dense_h64"
    embed_train: TrainConfig | None = None
    scheme_id: str | None = None
    scheme_params: dict | None = None
    transfer_data: Dataset | None = None
    max_queries: int | None = None
    _pretrained: dict = field(default_factory=dict, repr=False)

    def surrogate_train(self, tag: str, epochs: int | None = None,
                        lr: float | None = None) -> TrainConfig:
        cfg = self.train if epochs is None else replace(self.train, epochs=epochs)
        cfg = cfg.scaled(self.epoch_multiplier)
        if lr is not None:
            cfg = replace(cfg, learning_rate=lr)
        return replace(cfg, seed=derive_seed(self.seed, "attack-train", tag))

    def fresh_model(self, architecture: str, class_count: int, tag: str,
                    input_shape: tuple[int, ...] = (1, 10, 10)) -> Model:
        return build_model(architecture, class_count,
                           derive_seed(self.seed, "attack-init", tag), input_shape)

    def pretrained(self, architecture: str) -> Model:
        """Model trained on the transfer task, cached per architecture."""
        if self.transfer_data is None:
            raise AttackInfeasible("no transfer dataset available")
        if architecture not in self._pretrained:
            data = self.transfer_data
            model = build_model(architecture, data.class_count,
                                derive_seed(self.seed, "transfer-init", architecture),
                                data.images.shape[1:])
            cfg = self.surrogate_train(f"transfer-{architecture}")
            fit(model, data.images, data.labels, cfg)
            self._pretrained[architecture] = model
        return self._pretrained[architecture].clone()
