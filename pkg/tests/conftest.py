import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the summary prints them after the run."""

    def record(number: int, passed: bool, detail: str = ""):
        _LINES.append((number, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_LINES):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {detail}")
