"""Deterministic, splittable random streams.

Every stochastic routine takes a master ``seed`` and derives an independent
Philox stream for each unit of work from ``(seed, *key)``. Units can therefore
run in any order, or in parallel, and still produce bit-identical output.
"""

from __future__ import annotations

import numpy as np

SeedLike = int | None


def _entropy(seed):
    if seed is None:
        return None
    if isinstance(seed, (np.integer, int)):
        seed = int(seed)
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        return seed
    raise TypeError(f"seed must be an int or None, got {type(seed).__name__}")


def spawn_rng(seed: SeedLike, *key: int) -> np.random.Generator:
    """Return the generator for work unit ``key`` under master ``seed``."""
    ss = np.random.SeedSequence(_entropy(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: SeedLike, *key: int) -> int:
    """Derive a plain integer seed for a sub-task (e.g. to pass to another API)."""
    ss = np.random.SeedSequence(_entropy(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
