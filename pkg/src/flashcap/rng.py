"""Counter-based random streams.

Every Monte Carlo unit of work (one trajectory, one optimizer iteration,
one verification case) owns a stream derived from ``(master_seed, *path)``
through a Philox generator.  Streams are independent of thread scheduling
and worker count, which is what makes the reproducibility contract
(identical results for any worker count) possible.
"""

from __future__ import annotations

import numpy as np

# Tags namespacing derived streams, so e.g. trajectory 3 of an estimator
# never collides with case 3 of a bench check run under the same seed.
TRAJECTORY = 1
OPTIMIZER = 2
BENCH = 3
EVAL = 4


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the stream addressed by (seed, *path)."""
    key = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(key))


def derive_seed(seed: int, *path: int) -> int:
    """Deterministically derive a child seed from (seed, *path)."""
    key = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return int(key.generate_state(1, dtype=np.uint64)[0])
