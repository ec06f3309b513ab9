"""Seeded random streams.

Every replicate gets its own generator derived from ``(seed, *indices)``
through :class:`numpy.random.SeedSequence`, so a replicate's output does
not depend on how many other replicates ran or in what order.
"""
import numpy as np


def stream(seed, *indices):
    """Return the generator for ``seed`` and the replicate key ``indices``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(i) for i in indices))
    return np.random.default_rng(ss)


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
