import numpy as np
import pytest
from scipy import stats

from spdeweak import _kernels, rng
from spdeweak.errors import DomainError

# Known-answer vectors for Philox4x32-10 from the Random123 distribution.
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    (
        (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
        (0xA4093822, 0x299F31D0),
        (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
    ),
]


@pytest.mark.parametrize("ctr, key, expected", KAT)
def test_philox_known_answers(ctr, key, expected):
    ctrs = [np.array([c], dtype=np.uint64) for c in ctr]
    out = _kernels.philox4x32_numpy(*ctrs, *key)
    assert tuple(int(x[0]) for x in out) == expected


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_numba_and_numpy_paths_agree_bitwise():
    streams = np.array([0, 1, 7, 2 ** 40 + 3], dtype=np.uint64)
    for lane in (rng.LANE_INCREMENT, rng.LANE_PROBE):
        a = _kernels.uniform_pairs(12345, streams, 99, lane, 33, use_numba=True)
        b = _kernels.uniform_pairs(12345, streams, 99, lane, 33, use_numba=False)
        assert np.array_equal(a, b)


def test_uniforms_lie_in_open_interval():
    u = _kernels.uniform_pairs(0, np.arange(50, dtype=np.uint64), 0, 0, 100, use_numba=False)
    assert u.min() > 0.0 and u.max() < 1.0


def test_normals_are_standard():
    z = rng.standard_normals(7, np.arange(400), 3, 250).ravel()
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 4 / np.sqrt(z.size)


def test_low_modes_do_not_depend_on_truncation():
    a = rng.standard_normals(5, [0, 1, 2], 11, 8)
    b = rng.standard_normals(5, [0, 1, 2], 11, 129)
    assert np.array_equal(a, b[:, :8])


def test_distinct_addresses_give_distinct_draws():
    base = rng.standard_normals(5, [0], 0, 16)
    for other in (
        rng.standard_normals(6, [0], 0, 16),
        rng.standard_normals(5, [1], 0, 16),
        rng.standard_normals(5, [0], 1, 16),
        rng.standard_normals(5, [0], 0, 16, lane=rng.LANE_SPLIT_A),
    ):
        assert not np.any(base == other)


def test_rows_match_single_path_draws():
    batch = rng.standard_normals(3, [4, 9], 2, 10)
    single = rng.path_normals(rng.SeedPath(3, 9, 2), 10)
    assert np.array_equal(batch[1], single)


def test_seed_path_validation():
    assert rng.SeedPath(1, 2, 3).at(8).counter == 8
    with pytest.raises(DomainError):
        rng.SeedPath(1, -1, 0)
    with pytest.raises(DomainError):
        rng.SeedPath(1, 0, 2 ** 32)
    with pytest.raises(DomainError):
        rng.standard_normals(0, [0], 0, 0)


def test_env_flag_selects_numpy_path_with_identical_output():
    import os
    import subprocess
    import sys

    code = (
        "import numpy as np\n"
        "from spdeweak import _kernels, rng\n"
        "print(_kernels.HAVE_NUMBA)\n"
        "print(rng.standard_normals(5, [0, 3], 7, 9).tobytes().hex())\n"
    )
    outs = {}
    for flag in ("1", "0"):
        env = dict(os.environ, SPDEWEAK_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
        assert proc.returncode == 0, proc.stderr
        outs[flag] = proc.stdout.split()
    assert outs["1"][0] == "False"
    assert outs["0"][0] == str(_kernels.HAVE_NUMBA)
    assert outs["1"][1] == outs["0"][1]
