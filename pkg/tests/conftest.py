import numpy as np
import pytest

from dictcoh import matgen


@pytest.fixture
def frame3():
    """Columns e1, e2, (e1 + e2)/sqrt(2) in R^2."""
    s = 1.0 / np.sqrt(2.0)
    return matgen.external(np.array([[1.0, 0.0, s], [0.0, 1.0, s]]))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
