"""
Accuracy metrics between a true and an inferred preference
"""

import math
from typing import Optional

import numpy as np

from src.agents.dwrl import QTable, greedy_rollout
from src.core.errors import ConfigurationError, DimensionMismatchError
from src.core.preferences import PreferenceVector, ReturnSummary, scalarize
from src.envs.layout import EnvSpec
from src.envs.oracle import oracle_best

KL_EPSILON = 1e-8


def _pair(true_w: PreferenceVector, inferred: PreferenceVector) -> tuple[np.ndarray, np.ndarray]:
    if true_w.m != inferred.m:
        raise DimensionMismatchError(true_w.m, inferred.m, "inferred preference")
    return true_w.as_array(), inferred.as_array()


def kl_metric(true_w: PreferenceVector, inferred: PreferenceVector, epsilon: float = KL_EPSILON) -> float:
    """KL(true || inferred) of the two vectors as categorical distributions, both smoothed by epsilon"""
    p, q = _pair(true_w, inferred)
    p = (p + epsilon) / (p + epsilon).sum()
    q = (q + epsilon) / (q + epsilon).sum()
    return max(0.0, math.fsum((p * np.log(p / q)).tolist()))


def mse_metric(true_w: PreferenceVector, inferred: PreferenceVector) -> float:
    p, q = _pair(true_w, inferred)
    return math.fsum(((p - q) ** 2).tolist()) / p.size


def utility_metric(
    spec: EnvSpec,
    q: QTable,
    true_w: PreferenceVector,
    inferred: PreferenceVector,
    policy_returns: Optional[dict[int, ReturnSummary]] = None,
) -> float:
    """
    Scalarized return lost by acting on the inferred preference

    Both preferences are snapped to the agent's lattice and played greedily;
    the loss is measured with the true weights and clipped at 0.

    Args:
        policy_returns: Optional cache of greedy returns keyed by lattice index
    """
    _pair(true_w, inferred)
    if spec != q.spec:
        raise ConfigurationError("Agent was trained on a different layout")
    cache = policy_returns if policy_returns is not None else {}

    def achieved(w: PreferenceVector) -> float:
        idx, point, _ = q.space.snap(w)
        if idx not in cache:
            cache[idx] = greedy_rollout(q, point)
        return scalarize(true_w, cache[idx])

    return max(0.0, achieved(true_w) - achieved(inferred))


def oracle_utility_metric(spec: EnvSpec, true_w: PreferenceVector, inferred: PreferenceVector) -> float:
    """Utility loss judged by the exhaustive oracle instead of the agent"""
    _pair(true_w, inferred)
    best = scalarize(true_w, oracle_best(spec, true_w))
    chosen = scalarize(true_w, oracle_best(spec, inferred))
    return max(0.0, best - chosen)


def improvement(dwpi: float, baseline: float) -> Optional[float]:
    """Percentage by which DWPI improves on a baseline; None when the baseline is already 0"""
    if baseline == 0.0:
        return 0.0 if dwpi == 0.0 else None
    return (baseline - dwpi) / baseline * 100.0
