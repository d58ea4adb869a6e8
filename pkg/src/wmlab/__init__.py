"""Desk-scale laboratory for DNN watermarking robustness experiments.

Nine watermark embedding schemes, twenty-odd removal attacks and the
evaluation machinery (decision thresholds, rescaled watermark accuracy,
payoff matrices and their equilibrium) run end to end on tiny procedurally
generated image tasks, CPU only.
"""
from .attacks import (ATTACK_META, AttackContext, AttackOutcome, QueryOracle,
                      extract_model, modify, preprocess, run_attack,
                      run_pipeline)
from .config import ExperimentConfig, desk_config, load_config
from .data import Dataset, generate_task, generate_transfer, split
from .errors import (AttackInfeasible, ConfigError, ExtractionUndefined,
                     InputError, WmlabError)
from .evaluation import (PayoffMatrix, ThresholdModel, attack_success,
                         embedding_loss, estimate_threshold, nash, payoff_value,
                         rescale, stealing_loss, success_rate,
                         threshold_from_null)
from .experiment import Lab, build_matrix, run_cell, security_game
from .nn.model import ARCHITECTURES, Model, accuracy, build_model
from .nn.train import TrainConfig, train
from .records import ExperimentRecord, RecordStore
from .report import build_report, matrix_to_csv, pareto_indices
from .rng import derive_seed, rng
from .schemes import SCHEMES, SchemeConfig, get_scheme

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURES", "ATTACK_META", "AttackContext", "AttackInfeasible",
    "AttackOutcome", "ConfigError", "Dataset", "ExperimentConfig",
    "ExperimentRecord", "ExtractionUndefined", "InputError", "Lab", "Model",
    "PayoffMatrix", "QueryOracle", "RecordStore", "SCHEMES", "SchemeConfig",
    "ThresholdModel", "TrainConfig", "WmlabError", "accuracy",
    "attack_success", "build_matrix", "build_model", "build_report",
    "derive_seed", "desk_config", "embedding_loss", "estimate_threshold",
    "extract_model", "generate_task", "generate_transfer", "get_scheme",
    "load_config", "matrix_to_csv", "modify", "nash", "pareto_indices",
    "payoff_value", "preprocess", "rescale", "rng", "run_attack", "run_cell",
    "run_pipeline", "security_game", "split", "stealing_loss", "success_rate",
    "threshold_from_null", "train",
]
