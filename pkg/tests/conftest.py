import pytest

_RESULTS: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the line is printed in the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        prev = _RESULTS.get(number)
        ok = ok and (prev is None or prev[1])
        _RESULTS[number] = (title, ok, detail)
        print(f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
        assert ok, f"criterion {number} failed: {title} {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title} {detail}".rstrip())
