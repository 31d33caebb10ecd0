"""Deterministic random-number plumbing.

Everything random in the package flows through PCG64 generators seeded from
explicit integers, so identical seeds give identical streams on every
platform.  ``spawn`` derives independent named substreams from one master
seed, which keeps e.g. weight initialization stable while a permutation
stream varies.
"""

import numpy as np

__all__ = ["make_rng", "spawn"]


def make_rng(seed: int) -> np.random.Generator:
    """Fresh generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn(seed: int, *key: int) -> np.random.Generator:
    """Independent substream identified by ``(seed, *key)``."""
    entropy = [int(seed)] + [int(k) for k in key]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
