"""Deterministic seed derivation and generator construction.

All randomness flows through numpy Generators seeded from explicit integers.
A master seed fans out to independent streams through a keyed hash of string
labels, so adding or removing one experiment never shifts the seeds of the
others.
"""
from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: object) -> int:
    """Derive a 63-bit seed from an arbitrary label path.

    Label-based (not order-based): the same parts always map to the same
    seed regardless of what else has been derived.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def rng(seed: int) -> np.random.Generator:
    """Construct a fresh PCG64 generator for the given seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def secret_bytes(seed: int, n: int = 16) -> bytes:
    """Deterministic pseudo-secret byte string for keyed hashing."""
    return hashlib.blake2b(b"wmlab-secret-%d" % int(seed), digest_size=n).digest()
