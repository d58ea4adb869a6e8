"""Watermark removal attacks behind one registry.

Each attack declares its category, the deployment access it needs on the
defended model (white-box parameter access or black-box queries only) and
the attacker data it consumes (none, unlabeled domain images, labeled
domain images, or out-of-domain transfer images). run_attack enforces the
deployment requirement and returns a uniform AttackOutcome.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import AttackInfeasible, ConfigError
from ..targets import maybe_white_box
from ..workmeter import measure_work
from . import extraction as _ex
from . import modification as _mod
from .context import AttackContext, AttackOutcome
from .oracle import PreprocessedModel, QueryOracle
from .pipeline import run_pipeline, validate_stages
from .preprocessing import preprocess, preprocess_batch

CATEGORIES = ("input_preprocessing", "model_modification", "model_extraction")
DATA_ACCESS = ("none", "domain", "labeled", "transfer")


@dataclass(frozen=True)
class AttackMeta:
    attack_id: str
    category: str
    deployment: str  # "white_box" or "black_box"
    data_access: str


def _meta(attack_id, category, deployment, data_access) -> AttackMeta:
    return AttackMeta(attack_id, category, deployment, data_access)


ATTACK_META = {m.attack_id: m for m in [
    _meta("input_flip", "input_preprocessing", "white_box", "none"),
    _meta("input_noise", "input_preprocessing", "white_box", "none"),
    _meta("input_quantize", "input_preprocessing", "white_box", "none"),
    _meta("input_smooth", "input_preprocessing", "white_box", "none"),
    _meta("input_squeeze", "input_preprocessing", "white_box", "none"),
    _meta("ftal", "model_modification", "white_box", "labeled"),
    _meta("ftll", "model_modification", "white_box", "labeled"),
    _meta("rtal", "model_modification", "white_box", "domain"),
    _meta("rtll", "model_modification", "white_box", "domain"),
    _meta("weight_prune", "model_modification", "white_box", "none"),
    _meta("fine_prune", "model_modification", "white_box", "domain"),
    _meta("weight_quantize", "model_modification", "white_box", "domain"),
    _meta("label_smooth", "model_modification", "white_box", "domain"),
    _meta("regularization", "model_modification", "white_box", "domain"),
    _meta("overwrite", "model_modification", "white_box", "labeled"),
    _meta("adversarial_train", "model_modification", "white_box", "domain"),
    _meta("feature_permute", "model_modification", "white_box", "none"),
    _meta("weight_shift", "model_modification", "white_box", "domain"),
    _meta("retrain", "model_extraction", "black_box", "domain"),
    _meta("cross_arch", "model_extraction", "black_box", "domain"),
    _meta("distill", "model_extraction", "white_box", "domain"),
    _meta("smooth_retrain", "model_extraction", "black_box", "domain"),
    _meta("knockoff", "model_extraction", "black_box", "transfer"),
    _meta("transfer_learn", "model_extraction", "black_box", "domain"),
    _meta("adv_scratch", "model_extraction", "black_box", "domain"),
]}

PREPROCESS_IDS = {
    "input_flip": "flip",
    "input_noise": "noise",
    "input_quantize": "quantize",
    "input_smooth": "smooth",
    "input_squeeze": "squeeze",
}


def _mod_ftal(m, d, ctx, p):
    return _mod.fine_tune(m, d, ctx, "ftal", **p)


def _mod_ftll(m, d, ctx, p):
    return _mod.fine_tune(m, d, ctx, "ftll", **p)


def _mod_rtal(m, d, ctx, p):
    return _mod.fine_tune(m, d, ctx, "rtal", **p)


def _mod_rtll(m, d, ctx, p):
    return _mod.fine_tune(m, d, ctx, "rtll", **p)


def _mod_weight_prune(m, d, ctx, p):
    return _mod.weight_prune(m, p.get("sparsity", 0.5), ctx,
                             seed=p.get("seed", ctx.seed))


def _mod_feature_permute(m, d, ctx, p):
    return _mod.feature_permute(m, seed=p.get("seed", ctx.seed))


MODIFICATIONS = {
    "ftal": _mod_ftal,
    "ftll": _mod_ftll,
    "rtal": _mod_rtal,
    "rtll": _mod_rtll,
    "weight_prune": _mod_weight_prune,
    "fine_prune": lambda m, d, ctx, p: _mod.fine_prune(m, d, ctx, **p),
    "weight_quantize": lambda m, d, ctx, p: _mod.weight_quantize(m, d, ctx, **p),
    "label_smooth": lambda m, d, ctx, p: _mod.label_smooth(m, d, ctx, **p),
    "regularization": lambda m, d, ctx, p: _mod.regularize(m, d, ctx, **p),
    "overwrite": lambda m, d, ctx, p: _mod.overwrite(m, d, ctx, p or None),
    "adversarial_train": lambda m, d, ctx, p: _mod.adversarial_train(m, d, ctx, **p),
    "feature_permute": _mod_feature_permute,
    "weight_shift": lambda m, d, ctx, p: _mod.weight_shift(m, d, ctx, **p),
}

EXTRACTIONS = {
    "retrain": _ex.retrain,
    "cross_arch": _ex.cross_arch,
    "distill": _ex.distill,
    "smooth_retrain": _ex.smooth_retrain,
    "knockoff": _ex.knockoff,
    "transfer_learn": _ex.transfer_learn,
    "adv_scratch": _ex.adv_scratch,
}


def run_attack(attack_id: str, params: dict | None, target, data,
               ctx: AttackContext) -> AttackOutcome:
    """Run one attack against a deployed target and report the outcome."""
    if attack_id not in ATTACK_META:
        raise ConfigError(f"unknown attack '{attack_id}'")
    meta = ATTACK_META[attack_id]
    params = dict(params or {})
    if meta.category == "input_preprocessing":
        model = maybe_white_box(target)
        if model is None:
            raise AttackInfeasible(f"{attack_id} needs the model itself to wrap")
        return AttackOutcome(PreprocessedModel(model, PREPROCESS_IDS[attack_id],
                                               params), 0.0, 0)
    if meta.category == "model_modification":
        model = maybe_white_box(target)
        if model is None:
            raise AttackInfeasible(f"{attack_id} needs white-box model access")
        with measure_work() as meter:
            surrogate = MODIFICATIONS[attack_id](model, data, ctx, params)
        return AttackOutcome(surrogate, meter.seconds, 0)
    architecture = params.pop("architecture", ctx.architecture)
    return EXTRACTIONS[attack_id](target, data, architecture, ctx, **params)


def modify(model, attack_id: str, params: dict, data, ctx: AttackContext):
    """White-box modification facade; returns the surrogate model."""
    meta = ATTACK_META.get(attack_id)
    if meta is None or meta.category != "model_modification":
        raise ConfigError(f"'{attack_id}' is not a model-modification attack")
    return run_attack(attack_id, params, model, data, ctx).surrogate


def extract_model(target, strategy: str, params: dict, data, architecture: str,
                  ctx: AttackContext) -> AttackOutcome:
    meta = ATTACK_META.get(strategy)
    if meta is None or meta.category != "model_extraction":
        raise ConfigError(f"'{strategy}' is not a model-extraction strategy")
    params = dict(params or {})
    params["architecture"] = architecture
    return run_attack(strategy, params, target, data, ctx)


__all__ = [
    "ATTACK_META", "AttackContext", "AttackMeta", "AttackOutcome",
    "PreprocessedModel", "QueryOracle", "extract_model", "modify",
    "preprocess", "preprocess_batch", "run_attack", "run_pipeline",
    "validate_stages",
]
