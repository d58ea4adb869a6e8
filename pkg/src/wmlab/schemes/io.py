"""Key serialization: versioned JSON, arrays as base64 float64 payloads."""
from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .base import message_from_str, message_to_str
from .dawn import DawnKey
from .deepsigns import ActivationKey
from .projection import ProjectionKey
from .trigger import TriggerKey

FORMAT = "wmlab-key"
VERSION = 1


def _enc(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {"__array__": base64.b64encode(a.tobytes()).decode(), "shape": list(a.shape)}


def _dec(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["__array__"])
    return np.frombuffer(raw, dtype=np.float64).reshape(obj["shape"]).copy()


def _enc_meta(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        out[k] = _enc(v) if isinstance(v, np.ndarray) else v
    return out


def _dec_meta(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        out[k] = _dec(v) if isinstance(v, dict) and "__array__" in v else v
    return out


def key_to_json(key, message) -> str:
    if isinstance(key, TriggerKey):
        payload = {"kind": "trigger", "images": _enc(key.images),
                   "labels": _enc(key.labels), "meta": _enc_meta(key.meta)}
    elif isinstance(key, ProjectionKey):
        payload = {"kind": "projection", "layer_index": key.layer_index,
                   "matrix": _enc(key.matrix), "meta": _enc_meta(key.meta)}
    elif isinstance(key, ActivationKey):
        payload = {"kind": "activation", "layer_index": key.layer_index,
                   "matrix": _enc(key.matrix), "source_class": key.source_class,
                   "carriers": _enc(key.carriers), "meta": _enc_meta(key.meta)}
    elif isinstance(key, DawnKey):
        def items(store):
            return [[d, lab, _enc(img)] for d, (lab, img) in sorted(store.items())]
        payload = {"kind": "dawn", "secret": key.hash_secret.hex(),
                   "rate": key.rate, "class_count": key.class_count,
                   "collected": items(key.collected), "probe": items(key.probe)}
    else:
        raise ConfigError(f"cannot serialize key type {type(key).__name__}")
    doc = {"format": FORMAT, "version": VERSION, "scheme_id": key.scheme_id,
           "message": message_to_str(message), "key": payload}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def key_from_json(text: str):
    doc = json.loads(text)
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise ConfigError("not a supported key document")
    message = message_from_str(doc["message"])
    payload = doc["key"]
    scheme_id = doc["scheme_id"]
    kind = payload["kind"]
    if kind == "trigger":
        key = TriggerKey(scheme_id, _dec(payload["images"]), _dec(payload["labels"]),
                         meta=_dec_meta(payload["meta"]))
    elif kind == "projection":
        key = ProjectionKey(scheme_id, payload["layer_index"], _dec(payload["matrix"]),
                            meta=_dec_meta(payload["meta"]))
    elif kind == "activation":
        key = ActivationKey(scheme_id, payload["layer_index"], _dec(payload["matrix"]),
                            payload["source_class"], _dec(payload["carriers"]),
                            meta=_dec_meta(payload["meta"]))
    elif kind == "dawn":
        def store(entries):
            return {d: (int(lab), _dec(img)) for d, lab, img in entries}
        key = DawnKey(bytes.fromhex(payload["secret"]), payload["rate"],
                      payload["class_count"], store(payload["collected"]),
                      store(payload.get("probe", [])))
    else:
        raise ConfigError(f"unknown key kind {kind!r}")
    return key, message


def clone_key(key, message):
    """Deep independent copy via a serialization round-trip."""
    return key_from_json(key_to_json(key, message))


def save_key(key, message, path: str | Path) -> None:
    Path(path).write_text(key_to_json(key, message) + "\n", encoding="ascii")


def load_key(path: str | Path):
    return key_from_json(Path(path).read_text(encoding="ascii"))
