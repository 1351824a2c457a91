from pathlib import Path

import pytest

from multiform.dtd import load_canonical

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def table():
    return load_canonical()


@pytest.fixture(scope="session")
def fixtures():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
