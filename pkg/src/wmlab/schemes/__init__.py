"""Watermarking schemes behind a uniform keygen/embed/extract/verify facade."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .base import (CATEGORIES, Scheme, SchemeConfig, VerifyResult, as_message,
                   message_from_str, message_of_ones, message_to_str)
from .dawn import DawnKey, DawnOracle, DawnScheme, poisoned_fraction, wrap_dawn
from .deepsigns import ActivationKey, DeepSignsScheme
from .frontier import FrontierStitchingScheme
from .io import key_from_json, key_to_json, load_key, save_key
from .projection import (DeepMarksScheme, ProjectionKey, UchidaScheme,
                         correlation, signature_of, target_layer_index)
from .trigger import (AdiScheme, ContentScheme, NoiseScheme, TriggerKey,
                      UnrelatedScheme)

SCHEMES: dict[str, Scheme] = {
    s.scheme_id: s for s in (
        AdiScheme(), ContentScheme(), NoiseScheme(), UnrelatedScheme(),
        FrontierStitchingScheme(), UchidaScheme(), DeepMarksScheme(),
        DeepSignsScheme(), DawnScheme(),
    )
}


def get_scheme(scheme_id: str) -> Scheme:
    if scheme_id not in SCHEMES:
        raise ConfigError(f"unknown scheme '{scheme_id}'; have {sorted(SCHEMES)}")
    return SCHEMES[scheme_id]


def scheme_for_key(key) -> Scheme:
    return get_scheme(key.scheme_id)


def keygen(scheme_id: str, cfg: SchemeConfig, data=None, model=None, seed: int = 0):
    """Generate (key, message) for a scheme.

    A model is required exactly for the model-dependent and
    parameter-encoding schemes, which need it for boundary search or layer
    shapes.
    """
    scheme = get_scheme(scheme_id)
    if scheme.requires_model_for_keygen and model is None:
        raise ConfigError(f"scheme '{scheme_id}' needs a model for keygen")
    return scheme.keygen(cfg, data, model, seed)


def embed(key, message, model, cfg: SchemeConfig):
    return scheme_for_key(key).embed(key, as_message(message), model, cfg)


def extract(key, target) -> np.ndarray:
    return scheme_for_key(key).extract(key, target)


def verify(key, message, target, theta: float) -> VerifyResult:
    if not 0.0 <= theta <= 1.0:
        raise ConfigError("theta must lie in [0, 1]")
    return scheme_for_key(key).verify(key, as_message(message), target, theta)


def deploy(key, model):
    """Deployment view of a marked model (identity except for active schemes)."""
    return scheme_for_key(key).deploy(model, key)


__all__ = [
    "CATEGORIES", "SCHEMES", "ActivationKey", "DawnKey", "DawnOracle",
    "ProjectionKey", "Scheme", "SchemeConfig", "TriggerKey", "VerifyResult",
    "as_message", "correlation", "deploy", "embed", "extract", "get_scheme",
    "key_from_json", "key_to_json", "keygen", "load_key", "message_from_str",
    "message_of_ones", "message_to_str", "poisoned_fraction", "save_key",
    "scheme_for_key", "signature_of", "target_layer_index", "verify",
    "wrap_dawn",
]
