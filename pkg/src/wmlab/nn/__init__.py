"""Minimal deterministic neural-network engine (float64, CPU-only)."""
from .adversarial import fgm, input_gradient, pgd
from .functional import binary_cross_entropy, cross_entropy, logistic, one_hot, softmax
from .io import load_model, model_from_json, model_to_json, save_model
from .layers import Conv2d, Dense, Flatten, ReLU, has_params
from .model import (ARCHITECTURES, Model, accuracy, build_model,
                    hidden_activation_index)
from .train import EarlyStopConfig, TrainConfig, fit, train

__all__ = [
    "ARCHITECTURES", "Conv2d", "Dense", "EarlyStopConfig", "Flatten", "Model",
    "ReLU", "TrainConfig", "accuracy", "binary_cross_entropy", "build_model",
    "cross_entropy", "fgm", "fit", "has_params", "hidden_activation_index",
    "input_gradient", "load_model", "logistic", "model_from_json",
    "model_to_json", "one_hot", "pgd", "save_model", "softmax", "train",
]
