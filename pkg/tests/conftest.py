import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ndsr.bnp import INTEGRALITY_TALLY  # noqa: E402
from ndsr.fixtures import figure1, figure2  # noqa: E402
from toys import ACCEPTANCE_LINES  # noqa: E402

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def fig1():
    return figure1()


@pytest.fixture
def fig2():
    return figure2()


@pytest.fixture
def golden_path():
    return os.path.join(DATA, "scenario1_30_120_90_MMMM_s1.json")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"integral-x check: {INTEGRALITY_TALLY['integral_z_nodes']} integral-z nodes, "
        f"{INTEGRALITY_TALLY['fractional_x']} with fractional x"
    )


def pytest_sessionfinish(session, exitstatus):
    # fractional x at an integral-z node anywhere in the suite is a failure
    if INTEGRALITY_TALLY["fractional_x"] and session.exitstatus == 0:
        session.exitstatus = 1
