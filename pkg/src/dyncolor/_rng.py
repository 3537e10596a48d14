"""Seed derivation: one root seed, independent named streams."""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, *labels: object) -> int:
    """Map ``(seed, *labels)`` to a 64-bit integer, stable across runs and platforms."""
    key = repr((int(seed),) + tuple(labels)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def derive_rng(seed: int, *labels: object) -> random.Random:
    return random.Random(derive_seed(seed, *labels))
