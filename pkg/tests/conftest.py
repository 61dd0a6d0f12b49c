from __future__ import annotations

import pytest

# criterion number -> list of (passed, detail) from the acceptance suite
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def record():
    """Record one acceptance sub-check and print its verdict."""

    def _record(criterion: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}")
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        ok = all(p for p, _ in checks)
        detail = "; ".join(d for _, d in checks)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
