import math

import pytest

from qdotspin.constants import DotParams, paper_device


@pytest.fixture
def dot():
    return paper_device().dots[0]


@pytest.fixture
def free_dot():
    """No relaxation at all."""
    return DotParams(T1=math.inf, T2=math.inf)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, format_line
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        title, passed, detail = RESULTS[number]
        terminalreporter.write_line(format_line(number, title, passed, detail))
