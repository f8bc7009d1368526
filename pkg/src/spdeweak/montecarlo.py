"""Sample-block fan-out and order-independent reductions for Monte Carlo."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class SampleStats:
    mean: float
    stderr: float
    count: int

    @classmethod
    def from_values(cls, values):
        """Mean and standard error with exactly rounded (``math.fsum``) sums.

        fsum makes the result independent of how samples were blocked.
        """
        v = np.asarray(values, dtype=np.float64).ravel()
        n = v.size
        if n == 0:
            return cls(math.nan, math.nan, 0)
        mean = math.fsum(v) / n
        if n == 1:
            return cls(mean, math.inf, 1)
        var = math.fsum((v - mean) ** 2) / (n - 1)
        return cls(mean, math.sqrt(var / n), n)


def block_ranges(samples, block_size, offset=0):
    return [
        np.arange(offset + s, offset + min(s + block_size, samples), dtype=np.uint64)
        for s in range(0, samples, block_size)
    ]


def map_blocks(fn, samples, block_size=1024, threads=1, axis=0, offset=0):
    """Apply ``fn(stream_ids)`` over fixed blocks and concatenate in block order.

    Blocks are fixed by ``block_size`` alone, so the output does not depend
    on ``threads``.
    """
    blocks = block_ranges(int(samples), int(block_size), offset)
    if threads and threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(fn, blocks))
    else:
        parts = [fn(b) for b in blocks]
    return np.concatenate(parts, axis=axis)
