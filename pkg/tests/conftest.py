import pytest

_CRITERION_LINES = []


@pytest.fixture
def criterion():
    """Recorder for acceptance criteria: prints one PASS/FAIL line and asserts.

    Lines are replayed in the terminal summary so the verdict of every
    criterion is visible even when pytest captures test output.
    """

    def _record(num: int, passed: bool, detail: str) -> None:
        line = f"criterion {num}: {'PASS' if passed else 'FAIL'} - {detail}"
        _CRITERION_LINES.append(line)
        print(line)
        assert passed, line

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
