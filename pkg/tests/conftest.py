import numpy as np
import pytest

from ringnode.tripod_dynamics import default_pulse, integrate, reference_rates


@pytest.fixture(scope="session")
def reference_run():
    """The illustrative operating point integrated once per session."""
    rates = reference_rates()
    pulse = default_pulse(rates)
    return integrate(None, pulse, rates, store_states=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
