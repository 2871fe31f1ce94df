import pytest

# one line per acceptance criterion, filled by tests/test_acceptance.py
CRITERIA: list[str] = []


@pytest.fixture
def criterion_log():
    def log(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
        CRITERIA.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
