import numpy as np
import pytest

ACCEPTANCE_LINES: list = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def report_line():
    """Record one pass/fail line; the lines are repeated in the terminal summary."""

    def record(text: str):
        print(text)
        ACCEPTANCE_LINES.append(text)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
