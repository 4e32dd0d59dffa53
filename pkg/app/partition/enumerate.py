"""Exhaustive enumeration of set partitions in canonical label form."""

from __future__ import annotations

from typing import Iterator

import numpy as np


def set_partitions(n: int) -> Iterator[np.ndarray]:
    """Yield every canonical label vector of ``n`` items (restricted growth strings).

    The count is the Bell number: 203 for n=6, 4140 for n=8.
    """
    if n == 0:
        yield np.zeros(0, dtype=np.int64)
        return
    labels = [0] * n

    def _grow(i: int, k: int) -> Iterator[np.ndarray]:
        if i == n:
            yield np.array(labels, dtype=np.int64)
            return
        for c in range(k + 1):
            labels[i] = c
            yield from _grow(i + 1, max(k, c + 1))

    labels[0] = 0
    yield from _grow(1, 1)
