"""Hot kernels: Philox4x32-10 counter-based bit generation.

Every kernel has a numba ``@njit`` implementation and a vectorised numpy
fallback that produce bit-identical output.  The numba path is used when
numba imports cleanly and ``SPDEWEAK_DISABLE_NUMBA`` is unset (or ``0``).
"""

import os

import numpy as np

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
MASK32 = 0xFFFFFFFF

_TWO_M53 = 1.0 / 9007199254740992.0


def _numba_requested():
    flag = os.environ.get("SPDEWEAK_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by SPDEWEAK_DISABLE_NUMBA")
    import numba as nb
except ImportError:
    nb = None

HAVE_NUMBA = nb is not None


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------

def philox4x32_numpy(c0, c1, c2, c3, k0, k1, rounds=10):
    """Philox4x32 on broadcastable uint32-valued arrays.

    Returns four uint64 arrays holding 32-bit outputs.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & MASK32 for c in (c0, c1, c2, c3))
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    c0, c1, c2, c3 = (c.copy() for c in (c0, c1, c2, c3))
    k0 = np.uint64(int(k0) & MASK32)
    k1 = np.uint64(int(k1) & MASK32)
    m0 = np.uint64(PHILOX_M0)
    m1 = np.uint64(PHILOX_M1)
    mask = np.uint64(MASK32)
    s32 = np.uint64(32)
    for r in range(rounds):
        p0 = c0 * m0
        p1 = c2 * m1
        n0 = (p1 >> s32) ^ c1 ^ k0
        n1 = p1 & mask
        n2 = (p0 >> s32) ^ c3 ^ k1
        n3 = p0 & mask
        c0, c1, c2, c3 = n0, n1, n2, n3
        if r < rounds - 1:
            k0 = np.uint64((int(k0) + PHILOX_W0) & MASK32)
            k1 = np.uint64((int(k1) + PHILOX_W1) & MASK32)
    return c0, c1, c2, c3


def _uniform_pairs_numpy(key0, key1, stream_ids, counter, lane, n_blocks):
    streams = np.asarray(stream_ids, dtype=np.uint64)[:, None]
    blocks = np.arange(n_blocks, dtype=np.uint64)[None, :]
    c2 = streams & np.uint64(MASK32)
    c3 = ((streams >> np.uint64(32)) & np.uint64(0xFFFF)) | np.uint64(lane << 16)
    c1 = np.uint64(counter & MASK32)
    x0, x1, x2, x3 = philox4x32_numpy(blocks, c1, c2, c3, key0, key1)
    out = np.empty((streams.shape[0], 2 * n_blocks), dtype=np.float64)
    a = (x0 >> np.uint64(5)).astype(np.float64)
    b = (x1 >> np.uint64(6)).astype(np.float64)
    out[:, 0::2] = (a * 67108864.0 + b + 0.5) * _TWO_M53
    a = (x2 >> np.uint64(5)).astype(np.float64)
    b = (x3 >> np.uint64(6)).astype(np.float64)
    out[:, 1::2] = (a * 67108864.0 + b + 0.5) * _TWO_M53
    return out


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @nb.njit(cache=True, nogil=True)
    def _philox_block(c0, c1, c2, c3, k0, k1):
        for r in range(10):
            p0 = c0 * np.uint64(PHILOX_M0)
            p1 = c2 * np.uint64(PHILOX_M1)
            n0 = (p1 >> np.uint64(32)) ^ c1 ^ k0
            n1 = p1 & np.uint64(MASK32)
            n2 = (p0 >> np.uint64(32)) ^ c3 ^ k1
            n3 = p0 & np.uint64(MASK32)
            c0 = n0
            c1 = n1
            c2 = n2
            c3 = n3
            k0 = (k0 + np.uint64(PHILOX_W0)) & np.uint64(MASK32)
            k1 = (k1 + np.uint64(PHILOX_W1)) & np.uint64(MASK32)
        return c0, c1, c2, c3

    @nb.njit(cache=True, nogil=True)
    def _uniform_pairs_numba(key0, key1, stream_ids, counter, lane, n_blocks):
        n_streams = stream_ids.shape[0]
        out = np.empty((n_streams, 2 * n_blocks), dtype=np.float64)
        k0 = np.uint64(key0)
        k1 = np.uint64(key1)
        c1 = np.uint64(counter) & np.uint64(MASK32)
        for i in range(n_streams):
            s = stream_ids[i]
            c2 = s & np.uint64(MASK32)
            c3 = ((s >> np.uint64(32)) & np.uint64(0xFFFF)) | (np.uint64(lane) << np.uint64(16))
            for j in range(n_blocks):
                x0, x1, x2, x3 = _philox_block(np.uint64(j), c1, c2, c3, k0, k1)
                a = np.float64(x0 >> np.uint64(5))
                b = np.float64(x1 >> np.uint64(6))
                out[i, 2 * j] = (a * 67108864.0 + b + 0.5) * _TWO_M53
                a = np.float64(x2 >> np.uint64(5))
                b = np.float64(x3 >> np.uint64(6))
                out[i, 2 * j + 1] = (a * 67108864.0 + b + 0.5) * _TWO_M53
        return out


def uniform_pairs(seed, stream_ids, counter, lane, n_blocks, use_numba=None):
    """Open-interval uniforms of shape ``(len(stream_ids), 2 * n_blocks)``.

    Block ``j`` of stream ``s`` is Philox4x32-10 applied to the counter
    ``(j, counter, s_lo, s_hi16 | lane << 16)`` under the 64-bit ``seed``.
    Each block yields two 53-bit uniforms.
    """
    if use_numba is None:
        use_numba = HAVE_NUMBA
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    key0, key1 = seed & MASK32, seed >> 32
    stream_ids = np.ascontiguousarray(stream_ids, dtype=np.uint64)
    if use_numba:
        if not HAVE_NUMBA:
            raise RuntimeError("numba path requested but numba is unavailable")
        return _uniform_pairs_numba(key0, key1, stream_ids, int(counter), int(lane), int(n_blocks))
    return _uniform_pairs_numpy(key0, key1, stream_ids, int(counter), int(lane), int(n_blocks))
