import warnings

import pytest

from kerrchain.wavepacket import QuadratureResolutionWarning

# one status line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def quiet_resolution():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureResolutionWarning)
        yield
