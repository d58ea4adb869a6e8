"""Model serialization: versioned JSON with bit-exact base64 float64 payloads."""
from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .layers import Conv2d, Dense, Flatten, ReLU
from .model import Model

FORMAT = "wmlab-model"
VERSION = 1


def _encode(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype=np.float64).tobytes()).decode("ascii")


def _decode(s: str, shape: tuple[int, ...]) -> np.ndarray:
    raw = base64.b64decode(s.encode("ascii"))
    return np.frombuffer(raw, dtype=np.float64).reshape(shape).copy()


def model_to_json(model: Model) -> str:
    layers = []
    for layer in model.layers:
        entry = layer.spec()
        if layer.kind == "dense":
            entry["weight"] = _encode(layer.W)
            entry["bias"] = _encode(layer.b)
        elif layer.kind == "conv2d":
            entry["weight"] = _encode(layer.W)
            entry["bias"] = _encode(layer.b)
        layers.append(entry)
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "architecture": model.architecture,
        "class_count": model.class_count,
        "input_shape": list(model.input_shape),
        "layers": layers,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> Model:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ConfigError("not a model document")
    if doc.get("version") != VERSION:
        raise ConfigError(f"unsupported model version {doc.get('version')!r}")
    layers = []
    for entry in doc["layers"]:
        kind = entry["kind"]
        if kind == "dense":
            w = _decode(entry["weight"], (entry["out"], entry["in"]))
            b = _decode(entry["bias"], (entry["out"],))
            layers.append(Dense(w, b))
        elif kind == "conv2d":
            shape = (entry["cout"], entry["cin"], entry["kernel"], entry["kernel"])
            w = _decode(entry["weight"], shape)
            b = _decode(entry["bias"], (entry["cout"],))
            layers.append(Conv2d(w, b))
        elif kind == "relu":
            layers.append(ReLU())
        elif kind == "flatten":
            layers.append(Flatten())
        else:
            raise ConfigError(f"unknown layer kind {kind!r}")
    return Model(layers, doc["class_count"], tuple(doc["input_shape"]),
                 doc.get("architecture", "custom"))


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model) + "\n", encoding="ascii")


def load_model(path: str | Path) -> Model:
    return model_from_json(Path(path).read_text(encoding="ascii"))
