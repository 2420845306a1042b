import sys

import pytest
from hypothesis import HealthCheck, settings

from cfx.moebius import make_context

settings.register_profile("cfx", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cfx")


@pytest.fixture(scope="session")
def ctx8():
    return make_context(8)


@pytest.fixture(scope="session")
def ctx12():
    return make_context(12)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
