import pytest

_LINES = []


@pytest.fixture
def report():
    """Record a one-line verdict; all verdicts are repeated in the terminal summary."""

    def add(name, passed, detail=""):
        line = f"{name}: {'PASS' if passed else 'FAIL'} {detail}".rstrip()
        _LINES.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
