import sys

import numpy as np
import pytest

from engine_testbench.sim import gas_generator, expander_bleed


@pytest.fixture(scope="session")
def gg():
    return gas_generator()


@pytest.fixture(scope="session")
def eb():
    return expander_bleed()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
