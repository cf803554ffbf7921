"""Counter-based random streams.

Every stochastic job draws from a Philox generator keyed by the master seed
plus a tuple of non-negative integers (purpose tag, replica index, ...), so
results never depend on scheduling order or worker count.
"""

from __future__ import annotations

import numpy as np

# purpose tags; keep values stable, they are part of the reproducibility contract
HAWKES = 1
JT = 2
BROWNIAN = 3
KERNEL = 4
MISC = 9


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
