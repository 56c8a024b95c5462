import json
from pathlib import Path

import numpy as np
import pytest

from freeflyer import scenarios
from freeflyer.checks import random_state
from freeflyer.model import BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel

GOLDEN = Path(__file__).parent / "golden"


def spatial_three_link(payload_mass=3.0):
    """Small non-planar chain with offsets in every direction and a payload."""
    base = BaseBody(25.0, InertiaTensor([[2.0, 0.1, -0.05], [0.1, 2.5, 0.02], [-0.05, 0.02, 1.8]]),
                    [0.3, -0.2, 0.25])
    links = [
        LinkParams.from_dh(DHParams(a=0.1, alpha=np.pi / 2, d=0.2, theta_offset=0.1), 4.0,
                           InertiaTensor.diagonal(0.05, 0.06, 0.04), [0.05, 0.12, 0.03]),
        LinkParams.from_dh(DHParams(a=0.5, alpha=-0.3, d=0.05), 3.0,
                           InertiaTensor.diagonal(0.01, 0.07, 0.07), [0.22, -0.02, 0.03]),
        LinkParams.from_dh(DHParams(a=0.35, alpha=np.pi / 2), 2.0,
                           InertiaTensor.diagonal(0.006, 0.03, 0.03), [0.15, 0.01, -0.01]),
    ]
    payload = Payload(payload_mass, InertiaTensor.diagonal(0.02, 0.03, 0.025), [0.05, 0.02, 0.1])
    return SystemModel(base, links, payload)


@pytest.fixture
def planar():
    return scenarios.planar_two_link()


@pytest.fixture
def spatial():
    return spatial_three_link()


@pytest.fixture
def esa():
    return scenarios.esa_dextrous()


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture(scope="session")
def golden():
    return json.loads((GOLDEN / "planar_oracle.json").read_text())


def state_for(model, rng, **kw):
    return random_state(model, rng, **kw)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
