import pytest

from cbiou import _backend

BACKENDS = sorted(_backend.BACKENDS)

# (criterion, passed, detail) lines collected by test_acceptance
ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = _backend.name
    _backend.use(request.param)
    yield request.param
    _backend.use(previous)


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail=""):
        ACCEPTANCE_LINES.append((number, title, passed, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title} {detail}".rstrip())
