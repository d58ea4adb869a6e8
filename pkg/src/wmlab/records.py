"""Experiment records and their append-only line store.

One record captures one (scheme, attack) cell end to end. Records serialize
as canonical single-line JSON so that identical runs produce byte-identical
stores.
"""
from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import InputError


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _round(x: float, places: int = 10) -> float:
    # cut float noise so stored values survive text round-trips unchanged
    return round(float(x), places)


@dataclass
class ExperimentRecord:
    scheme_id: str
    scheme_params: dict
    attack_id: str
    attack_params: dict
    seed: int
    acc_unmarked: float
    acc_marked: float
    acc_surrogate: float
    wmacc_raw: float
    wmacc_rescaled: float
    theta_used: float
    success: bool
    runtime_embed_s: float
    runtime_attack_s: float
    query_count: int
    error: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def embedding_loss(self) -> float:
        return self.acc_unmarked - self.acc_marked

    @property
    def stealing_loss(self) -> float:
        return self.acc_marked - self.acc_surrogate

    @property
    def payoff(self) -> float:
        return self.acc_surrogate if self.success else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("acc_unmarked", "acc_marked", "acc_surrogate", "wmacc_raw",
                     "wmacc_rescaled", "theta_used", "runtime_embed_s",
                     "runtime_attack_s"):
            d[name] = _round(d[name])
        return d

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        return cls(**d)

    @classmethod
    def from_json(cls, line: str) -> "ExperimentRecord":
        return cls.from_dict(json.loads(line))


class RecordStore:
    """Append-only store, one canonical JSON record per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: ExperimentRecord) -> None:
        line = record.to_json()
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="ascii") as fh:
                fh.write(line + "\n")

    def write_all(self, records) -> None:
        """Replace the store contents with the given records, in order."""
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", encoding="ascii") as fh:
                for record in records:
                    fh.write(record.to_json() + "\n")

    def load(self) -> list[ExperimentRecord]:
        if not self.path.exists():
            return []
        records = []
        for i, line in enumerate(self.path.read_text(encoding="ascii").splitlines()):
            if not line.strip():
                continue
            try:
                records.append(ExperimentRecord.from_json(line))
            except (json.JSONDecodeError, TypeError) as exc:
                raise InputError(f"corrupt record on line {i + 1}: {exc}") from exc
        return records

    def __len__(self) -> int:
        return len(self.load())
