import pytest

# criterion number -> list of (passed, line)
ACCEPTANCE: dict[int, list] = {}


@pytest.fixture
def report():
    """Record one acceptance verdict: ``report(k, passed, detail)``."""

    def _report(criterion: int, passed: bool, detail: str) -> bool:
        line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE.setdefault(criterion, []).append((bool(passed), line))
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        verdicts = ACCEPTANCE[k]
        ok = all(p for p, _ in verdicts)
        terminalreporter.write_line(f"CRITERION {k:>2}: {'PASS' if ok else 'FAIL'}")
        for _, line in verdicts:
            terminalreporter.write_line("    " + line)
