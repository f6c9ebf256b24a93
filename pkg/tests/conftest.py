import pytest

_LINES = []


@pytest.fixture
def acceptance_report():
    """Collects one verdict line per acceptance criterion."""
    def record(number, ok, detail):
        _LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance")
        for line in _LINES:
            terminalreporter.write_line(line)
