"""Deterministic random streams keyed by (seed, stream id, replica id).

Every Monte Carlo routine draws from a generator derived here, so results
depend only on the key and never on scheduling or worker count.  Distinct
spawn keys give statistically independent PCG64 streams.
"""
from __future__ import annotations

import numpy as np

# stream ids, one per module that consumes randomness
DISORDER = 1
QUENCHED = 2
FRACMOM = 3
RENEWAL = 4
PAM = 5
POLYMER = 6
COLLISION = 7


def stream(seed: int, stream_id: int, replica: int = 0) -> np.random.Generator:
    """Generator for one (seed, stream, replica) cell of the experiment grid."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id), int(replica)))
    return np.random.Generator(np.random.PCG64(ss))
