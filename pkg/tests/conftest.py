import pytest

_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA] = []


@pytest.fixture
def criterion(request):
    """Record ``(number, passed, detail)`` for the acceptance summary; ``None`` marks a skip."""

    def record(number, passed, detail=""):
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        line = f"CRITERION {number}: {status}  {detail}".rstrip()
        request.config.stash[_CRITERIA].append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(_CRITERIA, []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)
