"""Deterministic seed derivation.

Every stochastic component in the package draws from a numpy Generator
seeded through :func:`derive_seed`, so any artifact (a synthetic pair, a
training run, a noise draw) is regenerable from a master seed plus a
descriptive path of mix-in components.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> int:
    # splitmix64 finalizer (as in Java's SplittableRandom); stable across platforms.
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *path: int | str) -> int:
    """Mix a master seed with path components into a new 64-bit seed.

    String components are hashed bytewise so call sites can label streams
    (e.g. ``derive_seed(seed, "noise", epoch, idx)``) without collisions
    between differently-structured paths.
    """
    state = int(master) & _MASK64
    for part in path:
        if isinstance(part, str):
            for byte in part.encode("utf-8"):
                state = _splitmix64(state ^ byte)
        elif isinstance(part, (int, np.integer)):
            state = _splitmix64(state ^ (int(part) & _MASK64))
        else:
            raise TypeError(f"seed path components must be int or str, got {type(part).__name__}")
        state = _splitmix64(state)
    return state


def rng_from(master: int, *path: int | str) -> np.random.Generator:
    """Generator seeded by :func:`derive_seed` of the given path."""
    return np.random.Generator(np.random.PCG64(derive_seed(master, *path)))
