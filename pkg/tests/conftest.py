from __future__ import annotations

import math

import pytest

from secroute.mc_oracle import McConfig
from secroute.model import NetworkModel, Path
from secroute.scenario import parse_scenario

SIX_NODE_POSITIONS = [
    (-10.0, 0.0),
    (5 * math.cos(0.75 * math.pi), 5 * math.sin(0.75 * math.pi)),
    (0.0, 0.0),
    (5 * math.cos(-0.25 * math.pi), 5 * math.sin(-0.25 * math.pi)),
    (10.0, 0.0),
    (15 * math.cos(0.25 * math.pi), 15 * math.sin(0.25 * math.pi)),
]


@pytest.fixture
def six_node() -> NetworkModel:
    return NetworkModel.uniform_power(SIX_NODE_POSITIONS, alpha=4.0, lambda_e=1e-5)


@pytest.fixture
def six_node_paths() -> list[Path]:
    """Source node 0 to node 4 with one to four hops."""
    return [Path.of(0, 4), Path.of(0, 2, 4), Path.of(0, 1, 2, 4), Path.of(0, 1, 2, 3, 4)]


@pytest.fixture
def single_hop() -> NetworkModel:
    return NetworkModel.uniform_power([(0.0, 0.0), (10.0, 0.0)], alpha=4.0, lambda_e=1e-4)


@pytest.fixture
def collinear() -> NetworkModel:
    return NetworkModel.uniform_power([(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)], alpha=4.0, lambda_e=1e-5)


@pytest.fixture
def fast_mc() -> McConfig:
    return McConfig(trials=2000, seed=11, tail_tolerance=1e-4)


@pytest.fixture
def scenario_file(tmp_path):
    def write(text: str):
        path = tmp_path / "scenario.conf"
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def six_node_config():
    return parse_scenario("builtin:six_node")
