import pytest

# Lines recorded by the acceptance suite, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def record(name: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{name} {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
