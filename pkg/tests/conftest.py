import pytest

# criterion number -> (passed, one-line summary); filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    def _record(number, passed, summary):
        # several tests may report parts of one criterion
        if number in ACCEPTANCE:
            prev_ok, prev = ACCEPTANCE[number]
            ACCEPTANCE[number] = (prev_ok and bool(passed), f"{prev}; {summary}")
        else:
            ACCEPTANCE[number] = (bool(passed), summary)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, summary = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {summary}")
