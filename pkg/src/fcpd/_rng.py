"""Counter-based random streams keyed on ``(seed, purpose, replication)``.

Each unit of work (a replication, or a fixed-size chunk of replications)
draws from its own Philox stream whose key comes from the master seed and a
purpose tag, and whose counter starts at a block reserved for the unit's
index.  Results therefore do not depend on how work is scheduled across
workers.
"""

from __future__ import annotations

import zlib
from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_MASK64 = (1 << 64) - 1


def _tag(purpose: str | int) -> int:
    if isinstance(purpose, int):
        return purpose & _MASK64
    return zlib.crc32(purpose.encode("utf-8"))


def stream(seed: int, purpose: str | int, rep: int, *sub: int) -> np.random.Generator:
    """Independent generator for replication ``rep`` of ``purpose``.

    ``sub`` adds extra key words (e.g. a segment's bounds) for nested studies.
    """
    key = _key((int(seed) & _MASK64, _tag(purpose), *[int(s) & _MASK64 for s in sub]))
    counter = np.array([0, 0, int(rep) & _MASK64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


@lru_cache(maxsize=4096)
def _key(words: tuple[int, ...]) -> np.ndarray:
    return np.random.SeedSequence(list(words)).generate_state(2, dtype=np.uint64)


def map_reps(fn: Callable[[int], T], n: int, workers: int = 1) -> list[T]:
    """``[fn(0), ..., fn(n-1)]``, optionally spread over a thread pool; order is preserved."""
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def chunks(n: int, size: int) -> Sequence[range]:
    return [range(i, min(i + size, n)) for i in range(0, n, size)]
