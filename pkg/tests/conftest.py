import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("striplab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("striplab")

PI = math.pi


@pytest.fixture(scope="session")
def acceptance_context():
    from striplab.acceptance import AcceptanceContext
    return AcceptanceContext()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n].line())
