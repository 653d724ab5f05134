import pytest

from qjfluor.verify import Matrix


@pytest.fixture(scope="session")
def matrix():
    """Shared cache of the 600 s acceptance runs (simulated on first use)."""
    return Matrix(seed=1)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
