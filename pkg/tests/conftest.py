"""
Shared fixtures: small layouts, lattices and a session-trained agent
"""

from pathlib import Path
from typing import Callable

import numpy as np
import orjson
import pytest
import structlog

from src.agents import QTable, TrainConfig, train_agent
from src.config import get_settings
from src.core.preferences import PreferenceSpace, enumerate_simplex
from src.demos import Demonstration, DemoSet
from src.envs import DeepSeaSpec, ItemGatheringSpec, default_spec, parse_env_spec

TINY_CDST = {
    "name": "cdst",
    "rows": 3,
    "cols": 3,
    "start": [0, 0],
    "episode_cap": 20,
    "discount": 0.9999,
    "walls": [],
    "treasures": [
        {"row": 1, "col": 0, "value": 1.0},
        {"row": 2, "col": 2, "value": 10.0},
    ],
}

SINGLE_TREASURE = {
    "name": "cdst",
    "rows": 2,
    "cols": 1,
    "start": [0, 0],
    "episode_cap": 10,
    "discount": 0.99,
    "treasures": [{"row": 1, "col": 0, "value": 5.0}],
}


def tiny_item_gathering(cap: int) -> dict:
    return {
        "name": "item_gathering",
        "rows": 2,
        "cols": 2,
        "start": [0, 0],
        "episode_cap": cap,
        "discount": 0.99,
        "items": [
            {"row": 0, "col": 1, "color": "green"},
            {"row": 1, "col": 0, "color": "red"},
            {"row": 1, "col": 1, "color": "yellow"},
        ],
    }


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    structlog.reset_defaults()


@pytest.fixture(scope="session")
def cdst_spec() -> DeepSeaSpec:
    return default_spec("cdst")


@pytest.fixture(scope="session")
def ig_spec() -> ItemGatheringSpec:
    return default_spec("item_gathering")


@pytest.fixture(scope="session")
def tiny_cdst_spec() -> DeepSeaSpec:
    return parse_env_spec(TINY_CDST)


@pytest.fixture(scope="session")
def single_treasure_spec() -> DeepSeaSpec:
    return parse_env_spec(SINGLE_TREASURE)


@pytest.fixture
def tiny_ig_factory() -> Callable[[int], ItemGatheringSpec]:
    return lambda cap: parse_env_spec(tiny_item_gathering(cap))


@pytest.fixture(scope="session")
def space2() -> PreferenceSpace:
    return enumerate_simplex(2, 0.1)


@pytest.fixture(scope="session")
def tiny_agent(tiny_cdst_spec, space2) -> QTable:
    return train_agent(tiny_cdst_spec, space2, TrainConfig(episodes=20_000, seed=0))


@pytest.fixture
def tiny_layout_file(tmp_path) -> Path:
    path = tmp_path / "tiny_cdst.json"
    path.write_bytes(orjson.dumps(TINY_CDST))
    return path


@pytest.fixture
def demo_factory(space2) -> Callable[..., DemoSet]:
    """Synthetic demo sets: features are a fixed linear image of the target"""

    def make(n: int, seed: int = 0, eta: float = 0.0, space: PreferenceSpace = space2) -> DemoSet:
        rng = np.random.default_rng(seed)
        demos = []
        for i in range(n):
            w = space.points[int(rng.integers(len(space)))]
            features = [10.0 * x + float(rng.normal(0.0, 0.01)) for x in w.weights]
            demos.append(Demonstration(features=features, target=w, noise_eta=eta, seed=i))
        return DemoSet(demos=tuple(demos), spec_hash="synthetic", lattice=space.descriptor())

    return make
