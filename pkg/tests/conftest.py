import pytest

_LINES = []


class CriterionLog:
    """Collects one human-readable verdict line per acceptance criterion."""

    def record(self, line: str) -> None:
        _LINES.append(line)
        print(line)


@pytest.fixture(scope="session")
def criteria():
    return CriterionLog()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
