"""Measured quantities: accuracies, losses, thresholds, payoffs, equilibria.

Everything here is a pure function of its arguments; model training and
attack execution live elsewhere. The decision threshold models the null
distribution of watermark accuracies on unmarked models as a normal and
places theta at the 1-p quantile.
"""
from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .data import Dataset
from .errors import InputError
from .targets import predict_probs

THETA_PRIME = 0.5  # common rescaled verification threshold
MAX_STEALING_LOSS = 0.05


def success_rate(a, b) -> float:
    """Fraction of agreeing bits between two equal-length messages."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if len(a) != len(b):
        raise InputError(f"message lengths differ: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise InputError("messages must contain at least one bit")
    return float(np.mean(a == b))


def target_accuracy(target, data: Dataset) -> float:
    """Test accuracy of any queryable target (model, oracle or wrapper)."""
    if data.labels is None:
        raise InputError("accuracy requires labeled data")
    if len(data) == 0:
        raise InputError("accuracy requires at least one sample")
    preds = np.argmax(predict_probs(target, data.images), axis=1)
    return float(np.mean(preds == data.label_indices()))


def embedding_loss(unmarked, marked, test: Dataset) -> float:
    """Test-accuracy cost of carrying the watermark; may be negative."""
    return target_accuracy(unmarked, test) - target_accuracy(marked, test)


def stealing_loss(marked, surrogate, test: Dataset) -> float:
    """Test-accuracy gap between the marked source and the attack surrogate."""
    return target_accuracy(marked, test) - target_accuracy(surrogate, test)


@dataclass
class ThresholdModel:
    scheme_id: str
    mu: float
    sigma: float
    p_value: float
    theta: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"scheme_id": self.scheme_id, "mu": self.mu, "sigma": self.sigma,
                "p_value": self.p_value, "theta": self.theta,
                "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdModel":
        return cls(d["scheme_id"], d["mu"], d["sigma"], d["p_value"], d["theta"],
                   d.get("degenerate", False))


def normal_quantile(q: float) -> float:
    if not 0.0 < q < 1.0:
        raise InputError("quantile must lie in (0, 1)")
    return NormalDist().inv_cdf(q)


def threshold_from_null(scheme_id: str, null_wmaccs, p_value: float) -> ThresholdModel:
    """Fit the normal null model and place theta at its 1-p quantile."""
    values = np.asarray(list(null_wmaccs), dtype=np.float64)
    if values.size < 2:
        raise InputError("need at least two null watermark accuracies")
    if not 0.0 < p_value < 1.0:
        raise InputError("p_value must lie in (0, 1)")
    mu = float(values.mean())
    sigma = float(values.std(ddof=1))
    if sigma == 0.0:
        return ThresholdModel(scheme_id, mu, sigma, p_value,
                              min(1.0, mu + 1e-9), degenerate=True)
    theta = min(1.0, mu + normal_quantile(1.0 - p_value) * sigma)
    return ThresholdModel(scheme_id, mu, sigma, p_value, theta)


def estimate_threshold(scheme_id: str, cfg, unmarked_models, n_keys: int,
                       key_len: int, p_value: float, *, data: Dataset,
                       reference_model, seed: int) -> ThresholdModel:
    """Null-distribution threshold: wmacc of fresh keys on unmarked models.

    Generates n_keys keys of length key_len against the reference model and
    measures every (key, unmarked model) pair's watermark accuracy against
    that key's own message.
    """
    from .rng import derive_seed
    from .schemes import SchemeConfig, get_scheme
    models = list(unmarked_models)
    if len(models) < 2:
        raise InputError("threshold estimation needs at least two unmarked models")
    if n_keys < 2:
        raise InputError("threshold estimation needs at least two keys")
    scheme = get_scheme(scheme_id)
    params = dict(cfg.params if hasattr(cfg, "params") else cfg or {})
    params["key_length"] = key_len
    if scheme_id == "dawn":
        params["probes"] = key_len
    nulls = []
    for k in range(n_keys):
        key_cfg = SchemeConfig(params=dict(params), data=data)
        key, message = scheme.keygen(key_cfg, data, reference_model,
                                     derive_seed(seed, "null-key", k))
        for model in models:
            nulls.append(scheme.watermark_accuracy(key, message, model))
    return threshold_from_null(scheme_id, nulls, p_value)


def rescale(x: float, theta: float) -> float:
    """Map raw wmacc so theta lands on 0.5 and 1 stays 1, clipped at 0."""
    if not 0.0 <= x <= 1.0:
        raise InputError("wmacc must lie in [0, 1]")
    if not 0.0 <= theta < 1.0:
        raise InputError("theta must lie in [0, 1)")
    scaled = (1.0 - THETA_PRIME) / (1.0 - theta) * x \
        + (THETA_PRIME - theta) / (1.0 - theta)
    return max(0.0, scaled)


def attack_success(wmacc_raw: float, theta: float, loss: float,
                   max_loss: float = MAX_STEALING_LOSS) -> bool:
    """Removed the watermark while keeping the surrogate useful."""
    return bool(wmacc_raw < theta and loss <= max_loss)


def payoff_value(success: bool, acc_surrogate: float) -> float:
    return float(acc_surrogate) if success else 0.0


@dataclass
class PayoffMatrix:
    defense_params: list
    attack_params: list
    values: np.ndarray  # [defense, attack]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.defense_params), len(self.attack_params)):
            raise InputError("payoff matrix shape does not match the grids")
        if self.values.size and (self.values.min() < 0 or self.values.max() > 1):
            raise InputError("payoff entries must lie in [0, 1]")


def nash(matrix: PayoffMatrix | np.ndarray) -> tuple[int, int, float]:
    """Defender minimizes over rows the attacker's best-response column.

    Ties resolve to the lowest index on both axes.
    """
    values = matrix.values if isinstance(matrix, PayoffMatrix) else \
        np.asarray(matrix, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise InputError("payoff matrix must be a nonempty 2-D array")
    best_attack = np.argmax(values, axis=1)
    row_values = values[np.arange(values.shape[0]), best_attack]
    d_star = int(np.argmin(row_values))
    a_star = int(best_attack[d_star])
    return d_star, a_star, float(values[d_star, a_star])
