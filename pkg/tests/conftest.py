"""Collects one verdict line per acceptance criterion and prints them after the run."""
import pytest

_VERDICTS: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def verdict():
    """``verdict(name, passed, detail)`` records a criterion result and fails the test if it did not pass."""

    def record(name: str, passed: bool, detail: str = ""):
        _VERDICTS.append((name, bool(passed), detail))
        print(f"\n[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        assert passed, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _VERDICTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
