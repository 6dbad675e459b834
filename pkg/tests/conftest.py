import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class CriterionReport:
    """Records one PASS/FAIL line per acceptance criterion and prints it immediately."""

    def record(self, number: int, ok: bool, detail: str) -> None:
        _RESULTS[number] = (bool(ok), detail)
        print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.fixture(scope="session")
def criterion():
    return CriterionReport()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {detail}")
