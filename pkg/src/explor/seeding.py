"""Deterministic seed derivation.

Every stochastic component in this package draws from its own
``numpy.random.Generator`` seeded through :func:`derive_seed`, so runs are
reproducible bit-for-bit and independent components never share a stream.
Child seeds are mixed from (parent seed, purpose tag, index) with splitmix64,
which is well distributed even for adjacent parent seeds or indices.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Finalizer from the splitmix64 generator; full-period bijection on u64.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def derive_seed(parent: int, purpose: str, index: int = 0) -> int:
    """Derive a child seed from a parent seed, a purpose tag, and an index.

    The same (parent, purpose, index) triple always yields the same child,
    and distinct purposes or indices yield unrelated streams.
    """
    h = _splitmix64(parent & _MASK64)
    h = _splitmix64(h ^ _fnv1a64(purpose.encode("utf-8")))
    h = _splitmix64(h ^ (index & _MASK64))
    return h


def generator(seed: int) -> np.random.Generator:
    """A fresh PCG64 generator for the given seed."""
    return np.random.Generator(np.random.PCG64(seed))
