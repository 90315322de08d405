import numpy as np
import pytest

from gafun.domains import make_family

ACCEPTANCE = []


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return passed


@pytest.fixture
def acceptance():
    return record


@pytest.fixture
def fam():
    return make_family("at_infinity")


@pytest.fixture
def fam_plus():
    return make_family("at_infinity", side="+")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
