"""Compare the numba and numpy Philox paths on the shapes the scheme uses.

    python benchmarks/bench_kernels.py [--samples 20000] [--modes 513] [--repeat 5]
"""

import argparse
import time

import numpy as np

from spdeweak import _kernels


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--modes", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    streams = np.arange(args.samples, dtype=np.uint64)
    blocks = (args.modes + 1) // 2
    call = lambda numba: _kernels.uniform_pairs(42, streams, 3, 0, blocks, use_numba=numba)

    ref = call(False)
    t_np = _best(lambda: call(False), args.repeat)
    print(f"shape ({args.samples}, {2 * blocks}) uniforms")
    print(f"numpy  {t_np * 1e3:9.2f} ms")
    if not _kernels.HAVE_NUMBA:
        print("numba  unavailable (not installed or SPDEWEAK_DISABLE_NUMBA set)")
        return
    call(True)  # compile
    t_nb = _best(lambda: call(True), args.repeat)
    same = np.array_equal(ref, call(True))
    print(f"numba  {t_nb * 1e3:9.2f} ms   speedup {t_np / t_nb:5.1f}x   bit-identical: {same}")


if __name__ == "__main__":
    main()
