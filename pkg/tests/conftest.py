from __future__ import annotations

import json
import pathlib

import pytest
from hypothesis import HealthCheck, settings

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ctmc_cells():
    return {r["name"]: r for r in json.loads((FIXTURES / "ctmc.json").read_text())}


@pytest.fixture(scope="session")
def mc_cells():
    return {r["name"]: r for r in json.loads((FIXTURES / "mc.json").read_text())}


# acceptance verdicts, echoed once more at the end of the run
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
