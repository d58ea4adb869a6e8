"""Deterministic cost accounting for runtime reporting.

Wall-clock timings are not reproducible, so runtime fields in records report
deterministic work: one unit per sample pass through a network (a backward
pass counts as a second unit). Units convert to seconds at a fixed reference
rate, which keeps rerun outputs byte-identical while preserving the relative
cost ranking between attacks.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager

UNITS_PER_SECOND = 100_000.0

_state = threading.local()


def _stack() -> list:
    if not hasattr(_state, "stack"):
        _state.stack = []
    return _state.stack


def add_work(units: int) -> None:
    for meter in _stack():
        meter.units += units


class WorkMeter:
    def __init__(self):
        self.units = 0

    @property
    def seconds(self) -> float:
        return self.units / UNITS_PER_SECOND


@contextmanager
def measure_work():
    meter = WorkMeter()
    _stack().append(meter)
    try:
        yield meter
    finally:
        _stack().remove(meter)
