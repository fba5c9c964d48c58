import numpy as np
import pytest

from sdaell import problems

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def paper():
    return problems.get("paper3x3").problem


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def record():
    """Log one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
