"""Experiment configuration: one JSON file drives the whole lab.

Schema (all keys optional unless noted, defaults shown by desk_config):

{
  "master_seed": 7,
  "out_dir": "runs/desk",
  "architecture": "dense_h32",
  "alt_architecture": "dense_h64",
  "task": {"seed": 11, "class_count": 4, "train_per_class": 60,
           "test_per_class": 40, "noise_std": 0.12, "image_size": 10},
  "train": {"learning_rate": 0.1, "epochs": 60, "batch_size": 16,
            "weight_decay": 0.0,
            "early_stop": {"monitored_loss": "task", "patience": 5,
                            "check_every": 0}},
  "embed": {...same shape as train...},
  "threshold": {"n_keys": 100, "key_length": 100, "p_value": 0.05,
                 "n_unmarked": 20},
  "budgets": {"epoch_multiplier": 1.0, "max_queries": 1000000},
  "transfer": {"class_count": 6, "per_class": 50, "noise_std": 0.1},
  "schemes": {"<scheme_id>": [ {param map}, ... ]},
  "attacks": {"<attack_id>": [ {param map}, ... ]}
}

"pipeline" is a valid attack id; each param map then carries "stages":
a list of [attack_id, {params}] pairs applied left to right.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .nn.model import ARCHITECTURES
from .nn.train import EarlyStopConfig, TrainConfig


@dataclass
class TaskSpec:
    seed: int = 11
    class_count: int = 4
    train_per_class: int = 60
    test_per_class: int = 40
    noise_std: float = 0.12
    image_size: int = 10


@dataclass
class ThresholdSpec:
    n_keys: int = 100
    key_length: int = 100
    p_value: float = 0.05
    n_unmarked: int = 20
    n_holdout: int = 10

    def __post_init__(self):
        if self.n_keys < 2 or self.n_unmarked < 2:
            raise ConfigError("threshold protocol needs >= 2 keys and >= 2 models")
        if self.key_length < 1:
            raise ConfigError("key_length must be >= 1")
        if not 0.0 < self.p_value < 1.0:
            raise ConfigError("p_value must lie in (0, 1)")


@dataclass
class BudgetSpec:
    epoch_multiplier: float = 1.0
    max_queries: int = 1_000_000

    def __post_init__(self):
        if self.epoch_multiplier <= 0:
            raise ConfigError("epoch_multiplier must be > 0")
        if self.max_queries < 1:
            raise ConfigError("max_queries must be >= 1")


@dataclass
class TransferSpec:
    class_count: int = 6
    per_class: int = 50
    noise_std: float = 0.1


@dataclass
class ExperimentConfig:
    master_seed: int = 7
    out_dir: str = "runs/desk"
    architecture: str = "dense_h32"
    alt_architecture: str = "dense_h64"
    task: TaskSpec = field(default_factory=TaskSpec)
    train: TrainConfig = field(default_factory=lambda: TrainConfig(
        learning_rate=0.1, epochs=60, batch_size=16,
        early_stop=EarlyStopConfig(monitored_loss="task", patience=5)))
    embed: TrainConfig = field(default_factory=lambda: TrainConfig(
        learning_rate=0.05, epochs=60, batch_size=16,
        early_stop=EarlyStopConfig(monitored_loss="watermark", patience=5)))
    threshold: ThresholdSpec = field(default_factory=ThresholdSpec)
    budgets: BudgetSpec = field(default_factory=BudgetSpec)
    transfer: TransferSpec = field(default_factory=TransferSpec)
    schemes: dict = field(default_factory=dict)
    attacks: dict = field(default_factory=dict)

    def __post_init__(self):
        from .attacks import ATTACK_META, validate_stages
        from .schemes import SCHEMES
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture '{self.architecture}'")
        if self.alt_architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture '{self.alt_architecture}'")
        if self.alt_architecture == self.architecture:
            raise ConfigError("alt_architecture must differ from architecture")
        for scheme_id, grid in self.schemes.items():
            if scheme_id not in SCHEMES:
                raise ConfigError(f"unknown scheme '{scheme_id}'")
            if not grid:
                raise ConfigError(f"empty parameter grid for scheme '{scheme_id}'")
        for attack_id, grid in self.attacks.items():
            if attack_id != "pipeline" and attack_id not in ATTACK_META:
                raise ConfigError(f"unknown attack '{attack_id}'")
            if not grid:
                raise ConfigError(f"empty parameter grid for attack '{attack_id}'")
            if attack_id == "pipeline":
                for params in grid:
                    validate_stages(params.get("stages", []))

    def defense_grid(self) -> list[tuple[str, dict]]:
        return [(sid, dict(params)) for sid, grid in self.schemes.items()
                for params in grid]

    def attack_grid(self) -> list[tuple[str, dict]]:
        return [(aid, dict(params)) for aid, grid in self.attacks.items()
                for params in grid]


def _train_from(d: dict, base: TrainConfig) -> TrainConfig:
    es = d.get("early_stop", "keep")
    if es == "keep":
        early = base.early_stop
    elif es is None:
        early = None
    else:
        early = EarlyStopConfig(**es)
    return TrainConfig(
        learning_rate=d.get("learning_rate", base.learning_rate),
        epochs=d.get("epochs", base.epochs),
        batch_size=d.get("batch_size", base.batch_size),
        weight_decay=d.get("weight_decay", base.weight_decay),
        early_stop=early,
        seed=d.get("seed", base.seed))


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    base = ExperimentConfig()
    known = {"master_seed", "out_dir", "architecture", "alt_architecture", "task",
             "train", "embed", "threshold", "budgets", "transfer", "schemes",
             "attacks"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ExperimentConfig(
            master_seed=int(doc.get("master_seed", base.master_seed)),
            out_dir=str(doc.get("out_dir", base.out_dir)),
            architecture=doc.get("architecture", base.architecture),
            alt_architecture=doc.get("alt_architecture", base.alt_architecture),
            task=TaskSpec(**doc.get("task", {})),
            train=_train_from(doc.get("train", {}), base.train),
            embed=_train_from(doc.get("embed", {}), base.embed),
            threshold=ThresholdSpec(**doc.get("threshold", {})),
            budgets=BudgetSpec(**doc.get("budgets", {})),
            transfer=TransferSpec(**doc.get("transfer", {})),
            schemes=doc.get("schemes", {}),
            attacks=doc.get("attacks", {}))
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def desk_config(**overrides) -> ExperimentConfig:
    """The default desk-scale grid: nine schemes, the full attack set."""
    doc = {
        "schemes": {
            "adi": [{}],
            "content": [{"mask_size": 4}],
            "noise": [{"sigma": 0.4}],
            "unrelated": [{}],
            "frontier_stitching": [{"epsilon": 0.17}],
            "uchida": [{"lam": 1.0}],
            "deepmarks": [{"gamma": 1.0}],
            "deepsigns": [{}],
            "dawn": [{"rate": 0.02}],
        },
        "attacks": {
            "input_flip": [{}],
            "input_noise": [{"sigma": 0.05}],
            "input_quantize": [{"bits": 4}],
            "input_smooth": [{"kernel": "gaussian", "sigma": 0.3}],
            "input_squeeze": [{"depth": 2}],
            "ftal": [{}],
            "ftll": [{}],
            "rtal": [{}],
            "rtll": [{}],
            "weight_prune": [{"sparsity": 0.8}],
            "fine_prune": [{"sparsity": 0.8}],
            "weight_quantize": [{"bits": 4}],
            "label_smooth": [{"epsilon": 0.3}],
            "regularization": [{"weight_decay": 0.1}],
            "overwrite": [{}],
            "adversarial_train": [{"epsilon": 0.1}],
            "feature_permute": [{}],
            "weight_shift": [{"lam1": 1.5, "lam2": 1.0}],
            "retrain": [{}],
            "cross_arch": [{}],
            "distill": [{"temperature": 2.0}],
            "smooth_retrain": [{"n": 3}],
            "knockoff": [{}],
            "transfer_learn": [{}],
            "adv_scratch": [{"epsilon": 0.1}],
            "pipeline": [{"stages": [["transfer_learn", {}], ["label_smooth", {}]]}],
        },
    }
    doc.update(overrides)
    return config_from_dict(doc)
