"""
Vector-reward gridworlds: Convex Deep Sea Treasure and Item Gathering
"""

from src.core.seeding import Seed
from src.envs.base import DEFAULT_NODE_BUDGET, Environment, TabularModel, Transition, compile_model
from src.envs.deep_sea import DeepSeaState, DeepSeaTreasure
from src.envs.item_gathering import ItemGathering, ItemGatheringState
from src.envs.layout import (
    COLORS,
    DeepSeaSpec,
    EnvSpec,
    Item,
    ItemGatheringSpec,
    Treasure,
    default_layout_path,
    default_spec,
    load_env_spec,
    parse_env_spec,
)
from src.envs.oracle import make_env, oracle_best, oracle_returns, pareto_bounds, pareto_range


def reset(spec: EnvSpec, rng_seed: Seed = 0) -> tuple:
    """Initial state of an episode of ``spec``"""
    return make_env(spec).reset(rng_seed)


def step(spec: EnvSpec, s: tuple, a: int) -> Transition:
    """One transition of ``spec`` from state ``s`` under action ``a``"""
    return make_env(spec).step(s, a)


def return_bounds(spec: EnvSpec) -> list[tuple[float, float]]:
    return make_env(spec).return_bounds()


__all__ = [
    "COLORS",
    "DEFAULT_NODE_BUDGET",
    "DeepSeaSpec",
    "DeepSeaState",
    "DeepSeaTreasure",
    "EnvSpec",
    "Environment",
    "Item",
    "ItemGathering",
    "ItemGatheringSpec",
    "ItemGatheringState",
    "TabularModel",
    "Transition",
    "Treasure",
    "compile_model",
    "default_layout_path",
    "default_spec",
    "load_env_spec",
    "make_env",
    "oracle_best",
    "oracle_returns",
    "pareto_bounds",
    "pareto_range",
    "parse_env_spec",
    "reset",
    "return_bounds",
    "step",
]
