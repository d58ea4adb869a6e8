"""Sequential composition of attacks.

Stages run left-to-right; an extraction stage replaces the current target
with its surrogate, a modification stage transforms it in place, and an
input-preprocessing stage may only appear once, at the end, where it wraps
the final target. Query counts and runtimes accumulate.
"""
from __future__ import annotations

from ..errors import ConfigError
from ..nn.model import Model
from .context import AttackContext, AttackOutcome


def validate_stages(stages: list) -> list[tuple[str, dict]]:
    from . import ATTACK_META
    norm = []
    for stage in stages:
        if isinstance(stage, str):
            attack_id, params = stage, {}
        else:
            attack_id, params = stage
        if attack_id not in ATTACK_META:
            raise ConfigError(f"unknown attack '{attack_id}'")
        norm.append((attack_id, dict(params)))
    for pos, (attack_id, _) in enumerate(norm):
        meta = ATTACK_META[attack_id]
        if meta.category == "input_preprocessing" and pos != len(norm) - 1:
            raise ConfigError("an input-preprocessing stage must come last")
    return norm


def run_pipeline(stages: list, target, ctx: AttackContext, data_for) -> AttackOutcome:
    """Apply a validated stage list to a deployed target.

    data_for maps a data-access level ("none", "domain", "labeled",
    "transfer") to the attacker dataset for that level; a dict works.
    """
    from . import ATTACK_META, run_attack
    norm = validate_stages(stages)
    if isinstance(data_for, dict):
        table = data_for
        data_for = lambda access: table.get(access)
    if not norm:
        surrogate = target.clone() if isinstance(target, Model) else target
        return AttackOutcome(surrogate, 0.0, 0)
    current = target
    runtime = 0.0
    queries = 0
    for attack_id, params in norm:
        meta = ATTACK_META[attack_id]
        outcome = run_attack(attack_id, params, current,
                             data_for(meta.data_access), ctx)
        current = outcome.surrogate
        runtime += outcome.runtime_seconds
        queries += outcome.queries_made
    return AttackOutcome(current, runtime, queries)
