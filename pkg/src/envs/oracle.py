"""
Brute-force optimal-return oracle over the Pareto candidates of a layout
"""

from functools import lru_cache

import numpy as np

from src.core.preferences import PreferenceVector, RewardVector, scalarize
from src.envs.base import DEFAULT_NODE_BUDGET, Environment
from src.envs.deep_sea import DeepSeaTreasure
from src.envs.item_gathering import ItemGathering
from src.envs.layout import DeepSeaSpec, EnvSpec, ItemGatheringSpec


def make_env(spec: EnvSpec) -> Environment:
    if isinstance(spec, DeepSeaSpec):
        return DeepSeaTreasure(spec)
    if isinstance(spec, ItemGatheringSpec):
        return ItemGathering(spec)
    raise TypeError(f"Unsupported environment spec {type(spec).__name__}")


@lru_cache(maxsize=32)
def _cached_returns(spec: EnvSpec, node_budget: int) -> tuple[tuple[str, RewardVector], ...]:
    return tuple(make_env(spec).oracle_returns(node_budget).items())


def oracle_returns(spec: EnvSpec, node_budget: int = DEFAULT_NODE_BUDGET) -> dict[str, RewardVector]:
    """
    Undiscounted return of every Pareto-candidate deterministic behaviour

    Raises:
        OracleBudgetError: exhaustive search exceeded ``node_budget``
    """
    return dict(_cached_returns(spec, node_budget))


def oracle_best(
    spec: EnvSpec, w: PreferenceVector, node_budget: int = DEFAULT_NODE_BUDGET
) -> RewardVector:
    """
    Scalarized optimum over the oracle returns

    Ties go to the lexicographically smallest return vector.
    """
    candidates = sorted(oracle_returns(spec, node_budget).values(), key=lambda r: r.rewards)
    best = candidates[0]
    best_value = scalarize(w, best)
    for r in candidates[1:]:
        value = scalarize(w, r)
        if value > best_value:
            best, best_value = r, value
    return best


def pareto_bounds(spec: EnvSpec) -> list[tuple[float, float]]:
    """Per-objective [min, max] over the oracle returns"""
    mat = np.array([r.rewards for r in oracle_returns(spec).values()], dtype=np.float64)
    return [(float(lo), float(hi)) for lo, hi in zip(mat.min(axis=0), mat.max(axis=0))]


def pareto_range(spec: EnvSpec) -> tuple[float, ...]:
    """Per-objective spread of the oracle front; a degenerate spread counts as 1"""
    spreads = []
    for lo, hi in pareto_bounds(spec):
        spread = hi - lo
        spreads.append(spread if spread > 0.0 else 1.0)
    return tuple(spreads)
