"""
Environment contract shared by every gridworld

Environments are value-semantic: ``step`` takes a state and returns a new one,
nothing is mutated, so independent episodes can run side by side.
"""

from abc import ABC, abstractmethod
from collections import deque
from typing import Any, Generic, NamedTuple, TypeVar

import numpy as np
import structlog

from src.core.errors import ConfigurationError, InvalidActionError
from src.core.preferences import RewardVector
from src.core.seeding import Seed
from src.envs.layout import EnvSpec

logger = structlog.get_logger(__name__)

StateT = TypeVar("StateT", bound=tuple)
SpecT = TypeVar("SpecT", bound=EnvSpec)

DEFAULT_NODE_BUDGET = 2_000_000


class Transition(NamedTuple):
    """Outcome of one step; ``terminal`` also covers the episode cap, flagged by ``truncated``"""

    next_state: Any
    reward: RewardVector
    terminal: bool
    truncated: bool = False


class Environment(ABC, Generic[SpecT, StateT]):
    """
    Base class for the vector-reward gridworlds

    Subclasses provide the dynamics and the exhaustive Pareto oracle.
    """

    def __init__(self, spec: SpecT):
        self.spec = spec
        self.name = spec.name
        self.logger = structlog.get_logger(f"env.{self.name}")

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def n_actions(self) -> int:
        return self.spec.actions

    @property
    @abstractmethod
    def n_states(self) -> int:
        """Size of the dense state index space"""

    @abstractmethod
    def reset(self, rng_seed: Seed = 0) -> StateT:
        """Initial state of an episode"""

    @abstractmethod
    def _advance(self, state: StateT, action: int) -> tuple[StateT, tuple[float, ...], bool]:
        """Dynamics without cap handling: (next state, reward, true terminal)"""

    @abstractmethod
    def state_index(self, state: StateT) -> int:
        """Dense integer index of a state (step count excluded)"""

    @abstractmethod
    def oracle_returns(self, node_budget: int = DEFAULT_NODE_BUDGET) -> dict[str, RewardVector]:
        """Undiscounted return of every Pareto-candidate deterministic behaviour"""

    @abstractmethod
    def return_bounds(self) -> list[tuple[float, float]]:
        """Attainable [low, high] undiscounted return per objective"""

    def step(self, state: StateT, action: int) -> Transition:
        """
        Apply one action

        Raises:
            InvalidActionError: action outside [0, actions)
        """
        if not isinstance(action, (int, np.integer)) or not 0 <= action < self.n_actions:
            raise InvalidActionError(int(action), self.n_actions)
        next_state, reward, done = self._advance(state, int(action))
        capped = next_state.step_count >= self.spec.episode_cap  # type: ignore[attr-defined]
        return Transition(
            next_state=next_state,
            reward=RewardVector(rewards=reward),
            terminal=done or capped,
            truncated=capped and not done,
        )


class TabularModel(NamedTuple):
    """Dense deterministic transition tables of a compiled environment"""

    next_state: np.ndarray  # (S, A) int64
    rewards: np.ndarray  # (S, A, m) float64
    terminal: np.ndarray  # (S, A) bool, true terminals only
    start: int
    episode_cap: int
    discount: float
    reachable: np.ndarray  # (S,) bool

    @property
    def n_states(self) -> int:
        return int(self.next_state.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.next_state.shape[1])

    @property
    def m(self) -> int:
        return int(self.rewards.shape[2])


def compile_model(env: Environment) -> TabularModel:
    """
    Enumerate every state reachable from reset through ``step`` into dense tables

    Raises:
        ConfigurationError: for layouts whose reset is randomised
    """
    if getattr(env.spec, "randomize_items", False):
        raise ConfigurationError("Randomised item placement cannot be compiled to a fixed table")

    n_states, n_actions, m = env.n_states, env.n_actions, env.m
    next_state = np.zeros((n_states, n_actions), dtype=np.int64)
    rewards = np.zeros((n_states, n_actions, m), dtype=np.float64)
    terminal = np.zeros((n_states, n_actions), dtype=bool)
    reachable = np.zeros(n_states, dtype=bool)

    start_state = env.reset(0)
    start = env.state_index(start_state)
    reachable[start] = True
    queue = deque([start_state])
    while queue:
        state = queue.popleft()
        s = env.state_index(state)
        for a in range(n_actions):
            nxt, reward, done = env._advance(state, a)
            ns = env.state_index(nxt)
            next_state[s, a] = ns
            rewards[s, a] = reward
            terminal[s, a] = done
            if not done and not reachable[ns]:
                reachable[ns] = True
                queue.append(nxt._replace(step_count=0))  # type: ignore[attr-defined]

    env.logger.debug("Environment compiled", states=int(reachable.sum()), capacity=n_states)
    return TabularModel(
        next_state=next_state,
        rewards=rewards,
        terminal=terminal,
        start=start,
        episode_cap=env.spec.episode_cap,
        discount=env.spec.discount,
        reachable=reachable,
    )
