import sys

import pytest

from poestar.cli import load
from poestar.syntax import parse_term


def fixture_file(name):
    return load(name)


@pytest.fixture(scope="session")
def add_file():
    return load("add")


@pytest.fixture(scope="session")
def exp_file():
    return load("exp")


@pytest.fixture(scope="session")
def fac_file():
    return load("fac")


@pytest.fixture(scope="session")
def gadget_file():
    return load("gadget_k2")


def term(trs, text, normalized=False):
    return parse_term(text, trs, normalized=normalized)


def nat(trs, n, base="Z"):
    """``s^n(base)`` as a term."""
    return parse_term("s(" * n + base + ")" * n, trs)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
