"""
Pytest configuration and fixtures for the PTP load simulator tests.
"""

import copy
import os

import pytest
import yaml

from src.services.engine import Engine
from src.services.scenario_service import build_scenario, parse_scenario

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")

# zero drift, no offsets, no load: every delay is deterministic
QUIET_SCENARIO = {
    "scenario": "unit",
    "seed": 7,
    "duration_s": 2,
    "topology": {"name": "fig3", "slaves": 3},
    "clocks": {
        "master": {"drift": {"max_ppm": 0}},
        "slave": {"drift": {"max_ppm": 0}},
        "router": {"drift": {"max_ppm": 0}},
    },
    "sweep": {"repetitions": 1},
}


def deep_merge(base: dict, overrides: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@pytest.fixture
def engine():
    """Fresh engine with a fixed root seed."""
    return Engine(root_seed=1)


@pytest.fixture
def scenario_dict():
    """Factory for raw scenario mappings layered over the quiet baseline."""

    def _make(**overrides):
        return deep_merge(QUIET_SCENARIO, overrides)

    return _make


@pytest.fixture
def make_scenario(scenario_dict):
    """Factory for validated ScenarioConfig objects."""

    def _make(**overrides):
        return parse_scenario(scenario_dict(**overrides), source="test")

    return _make


@pytest.fixture
def make_simulation(make_scenario):
    """Factory for wired simulations; keyword arguments go to the scenario."""

    def _make(seed=None, up_mbps=None, down_mbps=None, **overrides):
        return build_scenario(make_scenario(**overrides), seed, up_mbps, down_mbps)

    return _make


@pytest.fixture
def line_scenario():
    """Single master-slave line with zero drift; routers and links adjustable."""

    def _make(routers=0, **overrides):
        return {"topology": {"name": "line", "routers": routers, "slaves": 1}, **overrides}

    return _make


@pytest.fixture
def write_scenario(tmp_path, scenario_dict):
    """Write a scenario mapping to a YAML file and return its path."""

    def _write(name="scenario.yaml", **overrides):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(scenario_dict(**overrides)))
        return str(path)

    return _write


@pytest.fixture
def shipped_config():
    """Path of a scenario shipped in configs/."""

    def _path(name):
        return os.path.join(CONFIG_DIR, name)

    return _path
