import pytest

_RESULTS: list[tuple[int, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record one acceptance line: ``acceptance(n, ok, detail)``; also printed live."""

    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _RESULTS.append((n, ok, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(_RESULTS):
        terminalreporter.write_line(line)
