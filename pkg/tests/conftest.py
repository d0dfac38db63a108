import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary hook prints them after the run."""
    def record(number, title, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number}: {title} {detail}".rstrip()))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
