"""
Shared pieces of the apprenticeship-learning baselines

Both methods repeatedly ask "what does the best policy for weight w return?".
That question is answered by a fresh single-weight Q-learner (``rl``) or by
the exhaustive oracle (``oracle``).
"""

import math
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.agents.qlearning import TrainConfig, greedy_action, q_learning
from src.core.errors import ConfigurationError, ReturnBoundsError
from src.core.preferences import PreferenceVector, ReturnSummary
from src.core.seeding import derive_seed
from src.envs.base import TabularModel, compile_model
from src.envs.layout import EnvSpec
from src.envs.oracle import make_env, oracle_best, pareto_bounds, pareto_range

logger = structlog.get_logger(__name__)

Bounds = tuple[tuple[float, float], ...]


class BaselineConfig(BaseModel):
    """Settings shared by PM and MWAL"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    iterations: int = Field(default=20, ge=1, description="Outer iterations T")
    inner: TrainConfig = Field(default_factory=lambda: TrainConfig(episodes=20_000))
    mwal_beta: float | Literal["auto"] = "auto"
    mwal_estimate: Literal["mean", "final"] = "mean"
    mwal_step_growth: float = Field(default=1.5, ge=1.0, description="Step factor while the gap keeps its direction")
    mwal_step_decay: float = Field(default=0.5, gt=0.0, le=1.0, description="Step factor when the gap reverses")
    mwal_tol: float = Field(default=1e-6, gt=0.0, description="Learner-demonstration match tolerance")
    bounds: Optional[Bounds] = Field(
        default=None, description="Per-objective (low, high) return bounds; None derives them from the front"
    )
    bounds_margin: float = Field(default=0.1, ge=0.0, description="Widening of derived bounds, as a fraction of range")
    feature_source: Literal["rl", "oracle"] = "rl"
    pm_tol: float = Field(default=1e-6, gt=0.0)
    seed: int = 0

    @field_validator("mwal_beta")
    @classmethod
    def check_beta(cls, v: float | str) -> float | str:
        if v != "auto" and not (0.0 < float(v) < 1.0):
            raise ValueError("mwal_beta must lie in (0, 1) or be 'auto'")
        return v

    @field_validator("bounds")
    @classmethod
    def check_bounds(cls, v: Optional[Bounds]) -> Optional[Bounds]:
        if v is None:
            return v
        for lo, hi in v:
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise ValueError("every bound must be finite with high > low")
        return v

    def beta(self, m: int) -> float:
        """Initial multiplicative-update base; ``auto`` is 1 / (1 + sqrt(2 ln m / T))"""
        if self.mwal_beta == "auto":
            return 1.0 / (1.0 + math.sqrt(2.0 * math.log(m) / self.iterations))
        return float(self.mwal_beta)


class IterationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int
    raw: tuple[float, ...]
    candidate: tuple[float, ...]
    feature_expectation: tuple[float, ...]
    margin: Optional[float] = None
    gain: Optional[tuple[float, ...]] = None
    step: Optional[float] = None


class BaselineResult(BaseModel):
    """Inferred preference plus the full iteration history"""

    model_config = ConfigDict(frozen=True)

    method: Literal["pm", "mwal"]
    inferred: PreferenceVector
    iterations_used: int
    converged: bool = False
    wall_clock: float = 0.0
    history: tuple[IterationRecord, ...] = ()


@lru_cache(maxsize=8)
def _compiled(spec: EnvSpec) -> TabularModel:
    return compile_model(make_env(spec))


def _greedy_return(model: TabularModel, q: np.ndarray) -> np.ndarray:
    total = np.zeros(model.m, dtype=np.float64)
    s = model.start
    for _ in range(model.episode_cap):
        a = greedy_action(q[s])
        total += model.rewards[s, a]
        if model.terminal[s, a]:
            break
        s = int(model.next_state[s, a])
    return total


def feature_expectation(
    spec: EnvSpec, w: PreferenceVector, cfg: BaselineConfig, stream: object = 0
) -> ReturnSummary:
    """
    Per-objective return of the w-optimal policy

    ``rl`` trains a fresh single-weight table seeded from ``cfg.seed`` and
    ``stream`` then rolls it out greedily; ``oracle`` looks the answer up.
    """
    if cfg.feature_source == "oracle":
        return ReturnSummary(returns=oracle_best(spec, w).rewards)
    model = _compiled(spec)
    inner = cfg.inner.model_copy(update={"seed": derive_seed(cfg.seed, "feature_expectation", stream)})
    q = q_learning(model, w.as_array()[None, :], inner)
    return ReturnSummary(returns=tuple(_greedy_return(model, q[:, 0, :]).tolist()))


def resolve_bounds(spec: EnvSpec, cfg: BaselineConfig) -> Bounds:
    """Configured bounds, or the front's bounds widened by ``bounds_margin`` of each range"""
    if cfg.bounds is not None:
        if len(cfg.bounds) != spec.m:
            raise ConfigurationError(
                "MWAL bounds must give one interval per objective",
                details={"bounds": len(cfg.bounds), "objectives": spec.m},
            )
        return cfg.bounds
    spread = pareto_range(spec)
    return tuple(
        (lo - cfg.bounds_margin * r, hi + cfg.bounds_margin * r)
        for (lo, hi), r in zip(pareto_bounds(spec), spread)
    )


def check_within(bounds: Bounds, values: np.ndarray) -> None:
    """
    Raises:
        ReturnBoundsError: first objective outside its bounds
    """
    for i, ((lo, hi), v) in enumerate(zip(bounds, values.tolist())):
        if not lo <= v <= hi:
            raise ReturnBoundsError(i, v, lo, hi)
