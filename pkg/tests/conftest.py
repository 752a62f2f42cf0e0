import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def criterion(request):
    """Report one acceptance criterion: print a PASS/FAIL line, then assert."""
    lines = request.config.stash[_KEY]

    def report(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} [{number:>2}] {title}: {detail}"
        print(line)
        lines.append((number, line))
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
