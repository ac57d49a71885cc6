"""Deterministic random streams.

Monte-Carlo work is cut into fixed-size blocks; block ``i`` always draws
from the same child stream of the master seed, so results do not depend on
how many threads run the blocks or in which order they finish.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 1 << 14


def as_seed_sequence(rng) -> np.random.SeedSequence:
    if rng is None:
        return np.random.SeedSequence(0)
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(2**63)))
    return np.random.SeedSequence(int(rng))


def child(seq: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + tuple(key))


def generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(as_seed_sequence(rng))


def block_sizes(total: int, block: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(total, block)
    return [block] * full + ([rest] if rest else [])


def map_blocks(fn, seq: np.random.SeedSequence, total: int, threads: int = 1) -> list:
    """Run ``fn(generator, size)`` on every block; results come back in block order."""
    jobs = [
        (np.random.default_rng(child(seq, i)), size) for i, size in enumerate(block_sizes(total))
    ]
    if threads <= 1 or len(jobs) == 1:
        return [fn(g, size) for g, size in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
