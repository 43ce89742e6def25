import pytest

_ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


@pytest.fixture
def criterion():
    """Record (criterion, passed, detail) so the run ends with a pass/fail line per criterion."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.setdefault(name, []).append((bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: (len(s.split()[0]), s)):
        results = _ACCEPTANCE[name]
        ok = all(p for p, _ in results)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
        for passed, detail in results:
            if detail:
                terminalreporter.write_line(f"        {'ok ' if passed else 'BAD'} {detail}")
