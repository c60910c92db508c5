"""
Tabular epsilon-greedy Q-learning over a compiled environment

One table is trained for a set of weight rows: each episode picks one row,
scalarizes the vector reward with it and backs up only that row's slice, so
the weight index acts as part of the state.
"""

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.seeding import Seed, as_generator
from src.envs.base import TabularModel

logger = structlog.get_logger(__name__)


class TrainConfig(BaseModel):
    """Q-learning hyperparameters"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    episodes: int = Field(default=200_000, ge=1)
    alpha: float = Field(default=0.1, gt=0.0, le=1.0, description="Learning rate")
    epsilon_start: float = Field(default=1.0, ge=0.0, le=1.0)
    epsilon_end: float = Field(default=0.05, ge=0.0, le=1.0)
    discount: float | None = Field(
        default=None, gt=0.0, le=1.0, description="Backup discount; None uses the layout's"
    )
    seed: int = 0

    @model_validator(mode="after")
    def check_schedule(self) -> "TrainConfig":
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon must not increase over training")
        return self

    def epsilon_at(self, episode: int) -> float:
        """Linear decay from epsilon_start (first episode) to epsilon_end (last)"""
        if self.episodes == 1:
            return self.epsilon_start
        frac = episode / (self.episodes - 1)
        return max(0.0, self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac)


def q_learning(
    model: TabularModel,
    weights: np.ndarray,
    cfg: TrainConfig,
    rng_seed: Seed | None = None,
    log_every: int = 0,
) -> np.ndarray:
    """
    Train a weight-conditioned action-value table

    Args:
        model: Compiled deterministic environment
        weights: (P, m) weight rows; each episode samples one uniformly
        cfg: Hyperparameters
        rng_seed: Overrides ``cfg.seed`` when given
        log_every: Emit a progress event every N episodes (0 disables)

    Returns:
        np.ndarray: (S, P, A) table of scalarized action values
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    rng = as_generator(cfg.seed if rng_seed is None else rng_seed)
    gamma = model.discount if cfg.discount is None else cfg.discount
    alpha = cfg.alpha
    n_rows = weights.shape[0]
    n_actions = model.n_actions
    cap = model.episode_cap

    q = np.zeros((model.n_states, n_rows, n_actions), dtype=np.float64)
    # (P, S, A) scalarized rewards
    scalar_rewards = np.einsum("sam,pm->psa", model.rewards, weights)
    next_state = model.next_state
    terminal = model.terminal

    for episode in range(cfg.episodes):
        epsilon = cfg.epsilon_at(episode)
        p = int(rng.integers(n_rows)) if n_rows > 1 else 0
        qp = q[:, p, :]
        rp = scalar_rewards[p]
        s = model.start
        for _ in range(cap):
            if rng.random() < epsilon:
                a = int(rng.integers(n_actions))
            else:
                a = int(np.argmax(qp[s]))
            ns = int(next_state[s, a])
            if terminal[s, a]:
                target = rp[s, a]
            else:
                # cap truncation still bootstraps
                target = rp[s, a] + gamma * qp[ns].max()
            qp[s, a] += alpha * (target - qp[s, a])
            if terminal[s, a]:
                break
            s = ns
        if log_every and (episode + 1) % log_every == 0:
            logger.info("Q-learning progress", episode=episode + 1, epsilon=round(epsilon, 4))

    return q


def greedy_action(values: np.ndarray) -> int:
    """Argmax with ties broken toward the lowest action index"""
    return int(np.argmax(values))
