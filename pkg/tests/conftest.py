import numpy as np
import pytest

from bigmlab.model import builtin_counterexample
from bigmlab.reform import BigMConfig, bigm_reformulate, kkt_reformulate

ACCEPTANCE_LINES = []


@pytest.fixture
def ce():
    return builtin_counterexample()


@pytest.fixture
def ce_kkt(ce):
    return kkt_reformulate(ce)


@pytest.fixture
def milp_200(ce_kkt):
    return bigm_reformulate(ce_kkt, BigMConfig.uniform(2, 200, 200))


@pytest.fixture
def milp_50(ce_kkt):
    return bigm_reformulate(ce_kkt, BigMConfig([200, 200], [50, 50]))


def close(a, b, tol=1e-6):
    return np.allclose(np.asarray(a, float), np.asarray(b, float), atol=tol, rtol=0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
