"""Reproducible random substreams for block-parallel Monte-Carlo runs.

Every trial block gets its own counter-based Philox generator keyed by
(seed, block index). The worker that happens to execute a block never enters
the key, so results do not depend on how blocks are spread over workers.
"""
from typing import List, Tuple

import numpy as np

from .errors import ScenarioError

_MAX_SEED = 2 ** 64 - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) <= _MAX_SEED:
        raise ScenarioError("seed", f"must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def block_generator(seed: int, block_index: int) -> np.random.Generator:
    """Independent generator for one trial block."""
    sequence = np.random.SeedSequence([check_seed(seed), int(block_index)])
    return np.random.Generator(np.random.Philox(sequence))


def plan_blocks(n_trials: int, block_size: int) -> List[Tuple[int, int]]:
    """Split ``n_trials`` into (block_index, size) pairs of at most ``block_size``."""
    if n_trials < 1:
        raise ScenarioError("trials", f"must be at least 1, got {n_trials}")
    blocks = []
    start = 0
    index = 0
    while start < n_trials:
        size = min(block_size, n_trials - start)
        blocks.append((index, size))
        start += size
        index += 1
    return blocks
