import numpy as np
import pytest

from spdeweak.noise import CovarianceSpec
from spdeweak.kolmogorov import TestFunctional


@pytest.fixture
def rng_np():
    return np.random.default_rng(20261018)


@pytest.fixture
def white():
    return CovarianceSpec.white()


@pytest.fixture
def trace_class():
    return CovarianceSpec.power_decay(2.0)


def g_modes(n, pairs=((1, 1.0), (2, 0.5))):
    g = np.zeros(n)
    for k, v in pairs:
        g[k - 1] = v
    return g


@pytest.fixture
def cosine4():
    return TestFunctional.cosine(g_modes(4))


# -- acceptance reporting ---------------------------------------------------------

import time

_CRITERIA = []
_SESSION = {}
SUITE_BUDGET_S = 300.0


def pytest_sessionstart(session):
    _SESSION["start"] = time.perf_counter()


@pytest.fixture
def criterion():
    """``record(label, passed, detail)``: one line in the acceptance summary."""

    def record(label, passed, detail=""):
        _CRITERIA.append((label, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if "start" not in _SESSION:
        return
    elapsed = time.perf_counter() - _SESSION["start"]
    tr = terminalreporter
    if _CRITERIA:
        tr.section("acceptance criteria")
        for label, ok, detail in _CRITERIA:
            tr.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
    if config.getoption("collectonly"):
        return
    ok = elapsed < SUITE_BUDGET_S
    tr.write_line(f"suite runtime {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s): {'PASS' if ok else 'FAIL'}")
