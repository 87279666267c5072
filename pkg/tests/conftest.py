from __future__ import annotations

import pytest

_RESULTS: list[tuple[str, bool, str]] = []


class CriterionReport:
    """Collects one pass/fail line per acceptance criterion."""

    def check(self, label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        print(line)
        _RESULTS.append((label, bool(passed), detail))
        return bool(passed)


@pytest.fixture(scope="session")
def criteria() -> CriterionReport:
    return CriterionReport()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
