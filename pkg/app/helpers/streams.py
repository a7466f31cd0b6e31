"""
Deterministic random-number streams.

Every Monte-Carlo consumer derives its generator from (seed, purpose, ...)
through numpy's SeedSequence spawn keys, so a stream depends only on its
key and never on how many workers ran or in which order.
"""

from typing import Tuple

import numpy as np

# Purpose tags, first element of every spawn key
PATHS = 1
SWAP_SEQUENCE = 2
OPPONENT_SAMPLES = 3
TYPE_SAMPLES = 4
SCENARIO = 5
SYNTHETIC_HISTORY = 6
CLUSTERING = 7


def belief_key(delta: int) -> int:
    """Map a belief in {-1, 0, 1} to a non-negative spawn-key element."""
    return int(delta) + 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the sub-stream identified by ``key`` under ``seed``."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(sequence)


def path_blocks(n_paths: int, block: int) -> Tuple[Tuple[int, int], ...]:
    """Split ``n_paths`` into consecutive (start, stop) blocks of at most ``block`` paths."""
    return tuple((start, min(start + block, n_paths)) for start in range(0, n_paths, block))
