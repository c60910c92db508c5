"""
Dynamic-weight agent

A single Q-table indexed by (state, lattice preference, action). The
preference index is part of the state, so one trained table yields a greedy
policy for every lattice preference.
"""

from typing import Annotated, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.agents.qlearning import TrainConfig, greedy_action, q_learning
from src.core.errors import DimensionMismatchError, SnapError
from src.core.preferences import PreferenceSpace, PreferenceVector, ReturnSummary, scalarize
from src.core.seeding import Seed
from src.envs.base import compile_model
from src.envs.layout import DeepSeaSpec, ItemGatheringSpec
from src.envs.oracle import make_env, oracle_best

logger = structlog.get_logger(__name__)

SpecField = Annotated[DeepSeaSpec | ItemGatheringSpec, Field(discriminator="name")]

SNAP_SLACK = 1e-12


class QTable(BaseModel):
    """Trained, read-only action values of the dynamic-weight agent"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    space: PreferenceSpace
    spec: SpecField
    train_config: TrainConfig = Field(default_factory=TrainConfig)

    @field_validator("values", mode="before")
    @classmethod
    def freeze_values(cls, v: np.ndarray) -> np.ndarray:
        arr = np.array(v, dtype=np.float64, copy=True)
        if arr.ndim != 3:
            raise ValueError("Q values must be a (state, preference, action) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Q values must be finite")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_shape(self) -> "QTable":
        env = make_env(self.spec)
        expected = (env.n_states, len(self.space), env.n_actions)
        if self.values.shape != expected:
            raise ValueError(f"Q values have shape {self.values.shape}, expected {expected}")
        if self.space.m != self.spec.m:
            raise DimensionMismatchError(self.spec.m, self.space.m, "preference lattice")
        return self

    @property
    def n_states(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_preferences(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_actions(self) -> int:
        return int(self.values.shape[2])


def train_agent(spec: DeepSeaSpec | ItemGatheringSpec, space: PreferenceSpace, cfg: TrainConfig) -> QTable:
    """
    Train the preference-conditioned table across the whole lattice

    Each episode draws a lattice preference uniformly and runs epsilon-greedy
    Q-learning on the reward scalarized with it.

    Args:
        spec: Environment layout
        space: Preference lattice to condition on
        cfg: Hyperparameters (discount defaults to the layout's)

    Returns:
        QTable: Deterministic given ``cfg.seed``
    """
    if space.m != spec.m:
        raise DimensionMismatchError(spec.m, space.m, "preference lattice")
    model = compile_model(make_env(spec))
    log = logger.bind(env=spec.name, lattice=len(space), episodes=cfg.episodes)
    log.info("Training dynamic-weight agent", states=int(model.reachable.sum()))
    values = q_learning(model, space.matrix, cfg, log_every=max(cfg.episodes // 10, 1))
    return QTable(values=values, space=space, spec=spec, train_config=cfg)


def snap_preference(q: QTable, w: PreferenceVector | Sequence[float]) -> tuple[int, PreferenceVector]:
    """
    Lattice index of ``w``

    Raises:
        SnapError: ``w`` is farther than half a grid step from every lattice point
    """
    idx, point, dist = q.space.snap(w)
    limit = q.space.grid_step / 2.0
    if dist > limit + SNAP_SLACK:
        raise SnapError(dist, limit)
    return idx, point


def greedy_rollout(q: QTable, w: PreferenceVector, rng_seed: Seed = 0) -> ReturnSummary:
    """
    Play one greedy episode conditioned on ``w``

    Ties go to the lowest action index. The episode always ends by the
    layout's cap.

    Returns:
        ReturnSummary: Undiscounted per-objective return
    """
    idx, _ = snap_preference(q, w)
    env = make_env(q.spec)
    state = env.reset(rng_seed)
    total = np.zeros(env.m, dtype=np.float64)
    while True:
        a = greedy_action(q.values[env.state_index(state), idx])
        transition = env.step(state, a)
        total += transition.reward.as_array()
        if transition.terminal:
            break
        state = transition.next_state
    return ReturnSummary(returns=tuple(total.tolist()))


def oracle_match(q: QTable, tol: float = 1e-6) -> float:
    """Fraction of lattice points whose greedy scalarized return reaches the oracle optimum"""
    hits = 0
    for w in q.space.points:
        achieved = scalarize(w, greedy_rollout(q, w))
        best = scalarize(w, oracle_best(q.spec, w))
        if achieved >= best - tol:
            hits += 1
    fraction = hits / len(q.space)
    logger.info("Oracle comparison finished", env=q.spec.name, matched=hits, lattice=len(q.space))
    return fraction
