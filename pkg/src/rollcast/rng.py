"""Seeded random streams.

Every random draw in the toolkit comes from a generator addressed by
``(master_seed, *key)``. Keys are small tuples of ints, so a sub-stream
for e.g. ensemble member 17 of CEEMDAN never depends on how many draws
another member consumed.
"""

from __future__ import annotations

import numpy as np

# Top-level stream identifiers.
PHASES = 1
CEEMDAN_NOISE = 2
SWARM = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return an independent PCG64 generator for ``seed`` and ``key``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
