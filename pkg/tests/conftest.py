import os

import pytest
from hypothesis import settings

from fuzzdiag.simgen import reference_scenarios

settings.register_profile("default", max_examples=200, deadline=None)
settings.register_profile("fast", max_examples=25, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SURVEY_SEED = 1
HOLDOUT_SEED = 11
SCENARIO_SEED = 2


@pytest.fixture(scope="session")
def scenarios():
    return reference_scenarios()


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects (criterion, passed, detail) rows printed after the run."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(_ACCEPTANCE, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(rows):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
