"""Deterministic seed derivation: one user-facing 64-bit seed, mixed sub-seeds."""

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive(seed, *tags):
    """Mix a 64-bit seed with string/int tags into a new 64-bit seed.

    Uses SHA-256 so results are stable across platforms and Python runs
    (unlike the builtin hash).
    """
    h = hashlib.sha256()
    h.update(int(seed & MASK64).to_bytes(8, "little"))
    for tag in tags:
        h.update(str(tag).encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:8], "little")


def rng_for(seed, *tags):
    """Seeded numpy Generator for a (seed, purpose) pair."""
    return np.random.default_rng(derive(seed, *tags))
