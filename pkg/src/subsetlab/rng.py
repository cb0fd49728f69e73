"""Deterministic 64-bit seed derivation and random generators.

All randomness in the package flows through :func:`mix64`: a splitmix64
finalizer chained over the parts (integers and string labels), so any tuple of
coordinates maps to a stable 64-bit seed.  Independent substreams are derived
by mixing in distinct labels, e.g. ``mix64(seed, "design")`` versus
``mix64(seed, "noise")``.  The mapping is frozen; tests pin sample values so
accidental changes to it are caught.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def mix64(*parts: int | str) -> int:
    """Hash integers and string labels into one 64-bit seed.

    Order-sensitive and stable across runs and platforms.  Strings are folded
    through FNV-1a before entering the splitmix chain.
    """
    acc = 0x9E3779B97F4A7C15
    for part in parts:
        if isinstance(part, str):
            value = _fnv1a64(part.encode("utf-8"))
        elif isinstance(part, (int, np.integer)):
            value = int(part) & _MASK64
        else:
            raise TypeError(f"mix64 accepts ints and strings, got {type(part)!r}")
        acc = _splitmix64(acc ^ value)
    return acc


def generator(seed: int) -> np.random.Generator:
    """PCG64 generator for a mixed 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


def substream(seed: int, label: str) -> int:
    """Seed of the named substream of ``seed``."""
    return mix64(seed, label)
