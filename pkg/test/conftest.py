import logging
import os

import pytest

from fapsim.config import CONFIG_ENV_VAR
from fapsim.console import LevelFormatter
from fapsim.energy_models import FixedWing, RotaryWing
from fapsim.scenarios import reference_scenarios


SLOW_TESTS = os.environ.get("FAPSIM_SLOW_TESTS") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long batch checks, run with FAPSIM_SLOW_TESTS=1")


def pytest_collection_modifyitems(config, items):
    if SLOW_TESTS:
        return
    skip = pytest.mark.skip(reason="set FAPSIM_SLOW_TESTS=1 to run long batch checks")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch):
    """Keep user configuration and terminal colours out of every test."""

    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    monkeypatch.setenv("NO_COLOR", "1")
    root = logging.getLogger()
    level = root.level
    yield
    # drop the stderr handler installed by the CLI
    for handler in list(root.handlers):
        if isinstance(handler.formatter, LevelFormatter):
            root.removeHandler(handler)
    root.setLevel(level)


@pytest.fixture
def rotary():
    return RotaryWing()


@pytest.fixture
def fixed():
    return FixedWing()


@pytest.fixture(scope="session")
def references():
    return {len(s.gus): s for s in reference_scenarios()}
