"""Deterministic hierarchical seed derivation.

Every stochastic component of a benchmark run (fold shuffling, monitor
splits, weight init, batch order, dropout, subsampling) draws from its own
``numpy`` generator whose seed is derived from the root seed and a key path
such as ``(dataset, model, fold, purpose)``. There is no global mutable RNG:
the same root seed always reproduces the same tree of sub-seeds, and
distinct key paths get statistically independent streams.

Derivation is a splitmix64 walk: the root seed is mixed once, then each key
part (ints used directly, strings hashed with blake2b to 8 bytes) is XORed
into the state and mixed again. Python's builtin ``hash`` is never used
because it is salted per process.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One splitmix64 step; maps a 64-bit state to a well-mixed output."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _part_to_u64(part: int | str) -> int:
    if isinstance(part, bool):
        raise TypeError("bool seed parts are ambiguous; use int or str")
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")


def derive_seed(root: int, *parts: int | str) -> int:
    """Derive a 64-bit sub-seed from a root seed and a key path."""
    state = splitmix64(int(root) & _MASK64)
    for part in parts:
        state = splitmix64(state ^ _part_to_u64(part))
    return state


class SeedTree:
    """Root of a deterministic seed hierarchy."""

    def __init__(self, root: int):
        self.root = int(root) & _MASK64

    def derive(self, *parts: int | str) -> int:
        return derive_seed(self.root, *parts)

    def rng(self, *parts: int | str) -> np.random.Generator:
        return np.random.default_rng(self.derive(*parts))

    def __repr__(self) -> str:
        return f"SeedTree(root={self.root})"


def seed_everything(seed: int) -> SeedTree:
    """Build the seed tree all run-level randomness must derive from."""
    return SeedTree(seed)
