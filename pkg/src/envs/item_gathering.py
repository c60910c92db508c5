"""
Item Gathering

The agent walks an open grid (moves clamp at the border) picking up green, red
and yellow items. Entering an item cell removes the item and pays +1 on its
colour's objective. The episode ends when nothing is left or at the cap.
"""

from collections import deque
from typing import NamedTuple

import numpy as np

from src.core.errors import OracleBudgetError
from src.core.preferences import RewardVector, pareto_filter
from src.core.seeding import Seed, as_generator
from src.envs.base import DEFAULT_NODE_BUDGET, Environment
from src.envs.layout import COLORS, MOVES, ItemGatheringSpec


class ItemGatheringState(NamedTuple):
    row: int
    col: int
    remaining: int  # bit i set while item i is still on the grid
    step_count: int = 0
    placement: tuple[tuple[int, int], ...] = ()


class ItemGathering(Environment[ItemGatheringSpec, ItemGatheringState]):
    def __init__(self, spec: ItemGatheringSpec):
        super().__init__(spec)
        self._n_items = len(spec.items)
        self._colors = tuple(item.color_index for item in spec.items)
        self._default_placement = tuple(item.cell for item in spec.items)

    @property
    def n_states(self) -> int:
        return self.spec.rows * self.spec.cols * (1 << self._n_items)

    @property
    def full_mask(self) -> int:
        return (1 << self._n_items) - 1

    def reset(self, rng_seed: Seed = 0) -> ItemGatheringState:
        placement = self._default_placement
        if self.spec.randomize_items:
            rng = as_generator(rng_seed)
            free = [
                (r, c)
                for r in range(self.spec.rows)
                for c in range(self.spec.cols)
                if (r, c) != self.spec.start
            ]
            chosen = rng.choice(len(free), size=self._n_items, replace=False)
            placement = tuple(free[int(i)] for i in chosen)
        return ItemGatheringState(
            self.spec.start[0], self.spec.start[1], self.full_mask, 0, placement
        )

    def _advance(
        self, state: ItemGatheringState, action: int
    ) -> tuple[ItemGatheringState, tuple[float, ...], bool]:
        dr, dc = MOVES[action]
        row = min(max(state.row + dr, 0), self.spec.rows - 1)
        col = min(max(state.col + dc, 0), self.spec.cols - 1)
        reward = [0.0] * len(COLORS)
        remaining = state.remaining
        for i, cell in enumerate(state.placement or self._default_placement):
            if remaining >> i & 1 and cell == (row, col):
                remaining &= ~(1 << i)
                reward[self._colors[i]] = 1.0
                break
        nxt = ItemGatheringState(row, col, remaining, state.step_count + 1, state.placement)
        return nxt, tuple(reward), remaining == 0

    def state_index(self, state: ItemGatheringState) -> int:
        cell = state.row * self.spec.cols + state.col
        return (cell << self._n_items) | state.remaining

    def collected_counts(self, remaining: int) -> tuple[float, ...]:
        counts = [0.0] * len(COLORS)
        for i, color in enumerate(self._colors):
            if not remaining >> i & 1:
                counts[color] += 1.0
        return tuple(counts)

    def reachable_collections(self, node_budget: int = DEFAULT_NODE_BUDGET) -> set[int]:
        """Remaining-item masks reachable within the episode cap (depth-bounded BFS)"""
        start = (self.spec.start[0], self.spec.start[1], self.full_mask)
        depth = {start: 0}
        masks = {self.full_mask}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            d = depth[node]
            if d >= self.spec.episode_cap or node[2] == 0:
                continue
            state = ItemGatheringState(node[0], node[1], node[2], d)
            for a in range(self.n_actions):
                nxt, _, _ = self._advance(state, a)
                key = (nxt.row, nxt.col, nxt.remaining)
                if key in depth:
                    continue
                depth[key] = d + 1
                if len(depth) > node_budget:
                    raise OracleBudgetError(node_budget, self.name)
                masks.add(nxt.remaining)
                queue.append(key)
        return masks

    def oracle_returns(self, node_budget: int = DEFAULT_NODE_BUDGET) -> dict[str, RewardVector]:
        """Non-dominated collected-count vectors over every item subset reachable within the cap"""
        vectors = {self.collected_counts(mask) for mask in self.reachable_collections(node_budget)}
        front = pareto_filter(vectors)
        return {
            "collect:" + ",".join(f"{c}={int(v)}" for c, v in zip(COLORS, vec)): RewardVector(rewards=vec)
            for vec in front
        }

    def return_bounds(self) -> list[tuple[float, float]]:
        return [(0.0, float(n)) for n in self.spec.color_counts()]

    def items_remaining_by_color(self, state: ItemGatheringState) -> np.ndarray:
        counts = np.zeros(len(COLORS))
        for i, color in enumerate(self._colors):
            if state.remaining >> i & 1:
                counts[color] += 1
        return counts
