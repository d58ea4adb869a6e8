"""Exception types shared across the laboratory."""
from __future__ import annotations


class WmlabError(Exception):
    """Base class for all laboratory errors."""


class DimensionError(WmlabError, ValueError):
    """Tensor shapes do not line up."""


class InputError(WmlabError, ValueError):
    """Invalid argument values (empty data, missing labels, bad ranges)."""


class ConfigError(WmlabError, ValueError):
    """Invalid configuration: unknown ids, out-of-range parameters, bad files."""


class EmbeddingFailed(WmlabError, RuntimeError):
    """Watermark embedding did not converge within its budget.

    Carries the watermark accuracy reached when the budget ran out and the
    partially marked model, so callers that can live with an imperfect
    embedding (overwriting attackers) may still use the result.
    """

    def __init__(self, message: str, watermark_accuracy: float, model=None):
        super().__init__(message)
        self.watermark_accuracy = float(watermark_accuracy)
        self.model = model


class ExtractionUndefined(WmlabError, RuntimeError):
    """Watermark extraction is undefined for the given target.

    Raised e.g. for parameter-encoding extraction against an architecture
    with mismatching layer shapes, or against a query-only deployment.
    """


class AttackInfeasible(WmlabError, RuntimeError):
    """The attack cannot run in the given context (data/access constraints)."""
