import warnings

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_conservative():
    from lindstedt.errors import ConservativeMaximal
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConservativeMaximal)
        yield


def pytest_terminal_summary(terminalreporter):
    from _acceptance_log import LINES
    if LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(LINES):
            terminalreporter.write_line(line)
