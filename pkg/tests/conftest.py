"""Shared fixtures and the acceptance-criteria summary reporter."""

import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one pass/fail line per acceptance criterion."""

    def report(name: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(f"\nACCEPTANCE {line}", flush=True)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
