import numpy as np
import pytest

from src.core.errors import ConfigurationError, InvalidActionError, OracleBudgetError
from src.core.preferences import PreferenceVector, enumerate_simplex, scalarize
from src.envs import (
    DeepSeaState,
    compile_model,
    make_env,
    oracle_best,
    oracle_returns,
    pareto_range,
    parse_env_spec,
    reset,
    return_bounds,
    step,
)

UP, DOWN, LEFT, RIGHT = range(4)

CDST_FRONT = [
    (1.0, -1.0),
    (35.36, -3.0),
    (46.27, -5.0),
    (52.11, -7.0),
    (53.93, -8.0),
    (55.12, -9.0),
    (58.33, -13.0),
    (58.86, -14.0),
    (59.83, -17.0),
    (60.17, -19.0),
]

ITEM_GATHERING_FRONT = {(0.0, 1.0, 2.0), (0.0, 3.0, 1.0), (1.0, 0.0, 2.0), (1.0, 1.0, 1.0), (3.0, 0.0, 1.0)}


@pytest.mark.unit
class TestLayouts:
    def test_default_cdst(self, cdst_spec):
        assert (cdst_spec.rows, cdst_spec.cols) == (11, 10)
        assert cdst_spec.m == 2
        assert len(cdst_spec.treasures) == 10

    def test_default_item_gathering(self, ig_spec):
        assert (ig_spec.rows, ig_spec.cols) == (6, 6)
        assert ig_spec.m == 3
        assert ig_spec.color_counts() == (3, 3, 2)

    def test_values_must_increase_with_depth(self):
        with pytest.raises(ConfigurationError):
            parse_env_spec(
                {
                    "name": "cdst",
                    "rows": 3,
                    "cols": 3,
                    "episode_cap": 10,
                    "discount": 0.9,
                    "treasures": [{"row": 1, "col": 0, "value": 5.0}, {"row": 2, "col": 2, "value": 1.0}],
                }
            )

    def test_unreachable_treasure_rejected(self):
        with pytest.raises(ConfigurationError) as exc:
            parse_env_spec(
                {
                    "name": "cdst",
                    "rows": 3,
                    "cols": 1,
                    "episode_cap": 10,
                    "discount": 0.9,
                    "walls": [[1, 0]],
                    "treasures": [{"row": 2, "col": 0, "value": 5.0}],
                }
            )
        assert any("unreachable" in line for line in exc.value.details["errors"])

    def test_unknown_environment_name(self):
        with pytest.raises(ConfigurationError):
            parse_env_spec({"name": "mountain_car", "rows": 2, "cols": 2, "episode_cap": 5, "discount": 0.9})

    def test_spec_hash_is_content_based(self, tiny_cdst_spec):
        clone = parse_env_spec(tiny_cdst_spec.model_dump(mode="json"))
        assert clone.spec_hash() == tiny_cdst_spec.spec_hash()
        moved = tiny_cdst_spec.model_copy(update={"episode_cap": 21})
        assert moved.spec_hash() != tiny_cdst_spec.spec_hash()


@pytest.mark.unit
class TestDeepSeaDynamics:
    def test_reset_at_start(self, cdst_spec):
        assert reset(cdst_spec) == DeepSeaState(0, 0, 0)

    def test_first_treasure_in_one_step(self, cdst_spec):
        t = step(cdst_spec, reset(cdst_spec), DOWN)
        assert t.reward.rewards == (1.0, -1.0)
        assert t.terminal and not t.truncated

    def test_empty_move(self, cdst_spec):
        t = step(cdst_spec, reset(cdst_spec), RIGHT)
        assert (t.next_state.row, t.next_state.col) == (0, 1)
        assert t.reward.rewards == (0.0, -1.0)
        assert not t.terminal

    def test_border_bump_stays_put(self, cdst_spec):
        t = step(cdst_spec, reset(cdst_spec), UP)
        assert (t.next_state.row, t.next_state.col) == (0, 0)
        assert t.reward.rewards == (0.0, -1.0)

    def test_wall_bump_stays_put(self, cdst_spec):
        assert (5, 5) in set(cdst_spec.walls)
        t = step(cdst_spec, DeepSeaState(5, 6, 3), LEFT)
        assert (t.next_state.row, t.next_state.col) == (5, 6)
        assert t.reward.rewards == (0.0, -1.0)
        assert not t.terminal

    def test_cap_truncates(self, cdst_spec):
        t = step(cdst_spec, DeepSeaState(0, 0, cdst_spec.episode_cap - 1), UP)
        assert t.terminal and t.truncated

    @pytest.mark.parametrize("action", [-1, 4, 7])
    def test_invalid_action(self, cdst_spec, action):
        with pytest.raises(InvalidActionError):
            step(cdst_spec, reset(cdst_spec), action)

    def test_step_is_pure(self, cdst_spec):
        s = reset(cdst_spec)
        assert step(cdst_spec, s, RIGHT) == step(cdst_spec, s, RIGHT)
        assert s == DeepSeaState(0, 0, 0)


@pytest.mark.unit
class TestItemGatheringDynamics:
    def test_pickup_and_termination(self, tiny_ig_factory):
        spec = tiny_ig_factory(6)
        s = reset(spec)
        t = step(spec, s, RIGHT)
        assert t.reward.rewards == (1.0, 0.0, 0.0)
        t = step(spec, t.next_state, DOWN)
        assert t.reward.rewards == (0.0, 0.0, 1.0)
        t = step(spec, t.next_state, LEFT)
        assert t.reward.rewards == (0.0, 1.0, 0.0)
        assert t.terminal and not t.truncated

    def test_collected_item_is_gone(self, tiny_ig_factory):
        spec = tiny_ig_factory(6)
        t = step(spec, reset(spec), RIGHT)
        t = step(spec, t.next_state, LEFT)
        t = step(spec, t.next_state, RIGHT)
        assert t.reward.rewards == (0.0, 0.0, 0.0)

    def test_collected_items_never_exceed_the_layout(self, ig_spec):
        spec = ig_spec.model_copy(update={"episode_cap": 200})
        per_color = [sum(item.color == c for item in spec.items) for c in ("green", "red", "yellow")]
        assert [hi for _, hi in return_bounds(spec)] == per_color
        rng = np.random.default_rng(0)
        for _ in range(50):
            state, total = reset(spec), np.zeros(3)
            while True:
                t = step(spec, state, int(rng.integers(4)))
                assert min(t.reward.rewards) >= 0.0
                total += t.reward.as_array()
                state = t.next_state
                if t.terminal:
                    break
            assert np.all(total <= per_color)

    def test_border_clamps(self, ig_spec):
        t = step(ig_spec, reset(ig_spec), UP)
        assert (t.next_state.row, t.next_state.col) == (0, 0)
        assert t.reward.rewards == (0.0, 0.0, 0.0)

    def test_randomised_items_are_seeded(self, ig_spec):
        spec = ig_spec.model_copy(update={"randomize_items": True})
        assert reset(spec, 5) == reset(spec, 5)
        with pytest.raises(ConfigurationError):
            compile_model(make_env(spec))


@pytest.mark.unit
class TestOracle:
    def test_cdst_front(self, cdst_spec):
        front = sorted(r.rewards for r in oracle_returns(cdst_spec).values())
        assert front == pytest.approx(sorted(CDST_FRONT))

    def test_cdst_shortest_paths(self, cdst_spec):
        steps = sorted(-r.rewards[1] for r in oracle_returns(cdst_spec).values())
        assert steps == [1, 3, 5, 7, 8, 9, 13, 14, 17, 19]

    def test_cdst_front_is_convex(self, cdst_spec):
        """Every treasure is the unique optimum for some preference on the fine lattice"""
        fine = enumerate_simplex(2, 0.01)
        winners = {oracle_best(cdst_spec, w).rewards for w in fine.points}
        assert winners == set(CDST_FRONT)

    def test_cdst_coarse_lattice_winners(self, cdst_spec, space2):
        winners = [oracle_best(cdst_spec, w).rewards for w in space2.points]
        assert winners[:9] == CDST_FRONT[:9]
        assert winners[9] == winners[10] == CDST_FRONT[9]

    def test_item_gathering_front(self, ig_spec):
        front = {r.rewards for r in oracle_returns(ig_spec).values()}
        assert front == ITEM_GATHERING_FRONT

    @pytest.mark.parametrize(
        ("cap", "front"),
        [
            (6, {(1.0, 1.0, 1.0)}),
            (1, {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)}),
            (2, {(1.0, 0.0, 1.0), (0.0, 1.0, 1.0)}),
        ],
    )
    def test_tiny_item_gathering_fronts(self, tiny_ig_factory, cap, front):
        spec = tiny_ig_factory(cap)
        assert {r.rewards for r in oracle_returns(spec).values()} == front

    def test_budget_exceeded(self, ig_spec):
        with pytest.raises(OracleBudgetError):
            oracle_returns(ig_spec, node_budget=10)

    def test_oracle_best_maximises(self, cdst_spec):
        w = PreferenceVector(weights=[0.5, 0.5])
        best = scalarize(w, oracle_best(cdst_spec, w))
        assert all(scalarize(w, r) <= best for r in oracle_returns(cdst_spec).values())

    def test_pareto_range(self, cdst_spec):
        assert pareto_range(cdst_spec) == pytest.approx((59.17, 18.0))

    def test_return_bounds(self, cdst_spec, ig_spec):
        assert return_bounds(cdst_spec) == [(0.0, 60.17), (-100.0, 0.0)]
        assert return_bounds(ig_spec) == [(0.0, 3.0), (0.0, 3.0), (0.0, 2.0)]


@pytest.mark.unit
class TestCompiledModel:
    def test_tables_agree_with_step(self, tiny_cdst_spec):
        env = make_env(tiny_cdst_spec)
        model = compile_model(env)
        s = env.reset()
        for a in range(env.n_actions):
            t = env.step(s, a)
            idx = env.state_index(s)
            np.testing.assert_array_equal(model.rewards[idx, a], t.reward.as_array())
            assert model.terminal[idx, a] == (t.terminal and not t.truncated)
            if not t.terminal:
                assert model.next_state[idx, a] == env.state_index(t.next_state)

    def test_walls_unreachable(self, cdst_spec):
        env = make_env(cdst_spec)
        model = compile_model(env)
        for r, c in cdst_spec.walls:
            assert not model.reachable[r * cdst_spec.cols + c]
        assert model.reachable[model.start]
