"""
Convex Deep Sea Treasure

A submarine starts at (0, 0) and dives for treasures resting on a staircase
seabed. Objectives: (treasure value, time penalty). Every step costs -1 on the
time objective; entering a treasure cell pays its value and ends the episode.
"""

from collections import deque
from typing import NamedTuple

from src.core.errors import OracleBudgetError
from src.core.preferences import RewardVector
from src.core.seeding import Seed
from src.envs.base import DEFAULT_NODE_BUDGET, Environment
from src.envs.layout import MOVES, DeepSeaSpec


class DeepSeaState(NamedTuple):
    row: int
    col: int
    step_count: int = 0


class DeepSeaTreasure(Environment[DeepSeaSpec, DeepSeaState]):
    def __init__(self, spec: DeepSeaSpec):
        super().__init__(spec)
        self._walls = frozenset(spec.walls)
        self._treasures = spec.treasure_at()

    @property
    def n_states(self) -> int:
        return self.spec.rows * self.spec.cols

    def reset(self, rng_seed: Seed = 0) -> DeepSeaState:
        # fixed start; the seed is accepted for a uniform reset signature
        del rng_seed
        return DeepSeaState(self.spec.start[0], self.spec.start[1], 0)

    def _advance(self, state: DeepSeaState, action: int) -> tuple[DeepSeaState, tuple[float, ...], bool]:
        dr, dc = MOVES[action]
        cell = (state.row + dr, state.col + dc)
        if not self.spec.in_grid(cell) or cell in self._walls:
            cell = (state.row, state.col)
        nxt = DeepSeaState(cell[0], cell[1], state.step_count + 1)
        value = self._treasures.get(cell)
        if value is not None:
            return nxt, (value, -1.0), True
        return nxt, (0.0, -1.0), False

    def state_index(self, state: DeepSeaState) -> int:
        return state.row * self.spec.cols + state.col

    def shortest_paths(self, node_budget: int = DEFAULT_NODE_BUDGET) -> dict[tuple[int, int], int]:
        """Breadth-first step count from start to every reachable treasure"""
        start = self.spec.start
        dist = {start: 0}
        found: dict[tuple[int, int], int] = {}
        queue = deque([start])
        expanded = 0
        while queue:
            cell = queue.popleft()
            expanded += 1
            if expanded > node_budget:
                raise OracleBudgetError(node_budget, self.name)
            for dr, dc in MOVES:
                nxt = (cell[0] + dr, cell[1] + dc)
                if not self.spec.in_grid(nxt) or nxt in self._walls or nxt in dist:
                    continue
                dist[nxt] = dist[cell] + 1
                if nxt in self._treasures:
                    found[nxt] = dist[nxt]
                else:
                    queue.append(nxt)
        return found

    def oracle_returns(self, node_budget: int = DEFAULT_NODE_BUDGET) -> dict[str, RewardVector]:
        """One entry per treasure reachable within the cap: (value, -shortest path)"""
        paths = self.shortest_paths(node_budget)
        returns = {}
        for t in sorted(self.spec.treasures, key=lambda t: (t.row, t.col)):
            steps = paths.get(t.cell)
            if steps is None or steps > self.spec.episode_cap:
                continue
            returns[f"treasure@{t.row},{t.col}"] = RewardVector(rewards=(t.value, -float(steps)))
        return returns

    def return_bounds(self) -> list[tuple[float, float]]:
        best = max(t.value for t in self.spec.treasures)
        return [(0.0, best), (-float(self.spec.episode_cap), 0.0)]
