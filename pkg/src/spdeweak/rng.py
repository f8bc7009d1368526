"""Reproducible Gaussian streams keyed by (seed, stream_id, counter).

A draw is a pure function of its key, so Monte Carlo sums do not depend on
evaluation order or on how samples are split across workers.  Uniforms come
from Philox4x32-10 (see ``_kernels``); Gaussians are obtained by the inverse
normal CDF (``scipy.special.ndtri``) applied to those uniforms.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from . import _kernels
from .errors import DomainError

# Independent sub-streams sharing one (seed, stream_id, counter) key.
LANE_INCREMENT = 0
LANE_SPLIT_A = 1
LANE_SPLIT_B = 2
LANE_EXACT = 3
LANE_PROBE = 4
LANE_INNER = 5

MAX_STREAM_ID = (1 << 48) - 1
MAX_COUNTER = (1 << 32) - 1


@dataclass(frozen=True)
class SeedPath:
    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < (1 << 64):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not 0 <= self.stream_id <= MAX_STREAM_ID:
            raise DomainError("stream_id must lie in [0, 2^48)")
        if not 0 <= self.counter <= MAX_COUNTER:
            raise DomainError("counter must lie in [0, 2^32)")

    def at(self, counter):
        return replace(self, counter=int(counter))


def standard_normals(seed, stream_ids, counter, n, lane=LANE_INCREMENT, use_numba=None):
    """Standard normal array of shape ``(len(stream_ids), n)``.

    Column ``k - 1`` holds the draw for mode k; it does not depend on n, so
    truncations of different size share their low modes.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0 <= counter <= MAX_COUNTER:
        raise DomainError("counter out of range")
    stream_ids = np.atleast_1d(np.asarray(stream_ids, dtype=np.uint64))
    n_blocks = (int(n) + 1) // 2
    u = _kernels.uniform_pairs(seed, stream_ids, counter, lane, n_blocks, use_numba=use_numba)
    return ndtri(u[:, :n])


def path_normals(path, n, lane=LANE_INCREMENT):
    """The length-n Gaussian vector addressed by a single SeedPath."""
    return standard_normals(path.seed, [path.stream_id], path.counter, n, lane)[0]
