"""Dynamics, reward bounds, and determinism of the point environments."""

import numpy as np
import pytest

from skillpref import envs
from skillpref.envs import InvalidAction, PointGoal, PointRunner, action_delta, make_env


def action_id(dx: int, dy: int) -> int:
    return (dx + 1) * 3 + (dy + 1)


class TestActionGrid:
    def test_nine_distinct_vectors(self):
        deltas = {tuple(action_delta(a)) for a in range(9)}
        assert deltas == {(dx, dy) for dx in (-1.0, 0.0, 1.0) for dy in (-1.0, 0.0, 1.0)}

    def test_out_of_range_rejected(self):
        with pytest.raises(InvalidAction):
            action_delta(9)
        with pytest.raises(InvalidAction):
            action_delta(-1)


class TestPointRunner:
    def test_reset_near_origin_at_rest(self):
        env = PointRunner()
        for seed in range(10):
            s = env.reset(seed)
            assert abs(s[0]) <= 0.01 and abs(s[1]) <= 0.01
            assert s[2] == 0.0 and s[3] == 0.0

    def test_reset_deterministic(self):
        env = PointRunner()
        np.testing.assert_array_equal(env.reset(7), env.reset(7))

    def test_noop_from_rest(self):
        env = PointRunner()
        s = env.reset(0)
        s2, r, done = env.step(s, action_id(0, 0))
        assert r == 0.0
        assert s2[2] == 0.0 and s2[3] == 0.0
        assert not done

    def test_single_acceleration_reward(self):
        env = PointRunner()
        s = env.reset(0)
        s2, r, _ = env.step(s, action_id(+1, 0))
        assert s2[2] == pytest.approx(0.1)
        assert r == pytest.approx(0.1 / 1.5)

    def test_reward_saturates_at_target_speed(self):
        env = PointRunner()
        s = env.reset(0)
        r = 0.0
        for _ in range(30):
            s, r, _ = env.step(s, action_id(+1, 0))
        assert s[2] == pytest.approx(2.0)  # velocity clamp
        assert r == 1.0  # reward clamp at v_target

    def test_velocity_clamped_each_step(self):
        env = PointRunner()
        s = env.reset(3)
        rng = np.random.default_rng(0)
        for _ in range(300):
            s, _, _ = env.step(s, int(rng.integers(9)))
            assert abs(s[2]) <= 2.0 and abs(s[3]) <= 2.0

    def test_reward_bounds(self):
        env = PointRunner()
        s = env.reset(1)
        rng = np.random.default_rng(1)
        for _ in range(200):
            s, r, _ = env.step(s, int(rng.integers(9)))
            assert 0.0 <= r <= 1.0

    def test_episode_terminates_at_length(self):
        env = PointRunner()
        s = env.reset(0)
        for t in range(200):
            s, _, done = env.step(s, 4)
            assert done == (t == 199)

    def test_determinism_bit_identical(self):
        actions = list(np.random.default_rng(9).integers(9, size=50))
        states = []
        for _ in range(2):
            env = PointRunner()
            s = env.reset(42)
            seq = [s]
            for a in actions:
                s, _, _ = env.step(s, int(a))
                seq.append(s)
            states.append(np.stack(seq))
        np.testing.assert_array_equal(states[0], states[1])

    def test_faster_policy_earns_higher_return(self):
        def run(policy_action):
            env = PointRunner()
            s = env.reset(0)
            total, done = 0.0, False
            while not done:
                s, r, done = env.step(s, policy_action)
                total += r
            return total

        assert run(action_id(+1, 0)) > run(action_id(0, 0))


class TestPointGoal:
    def test_reset_goal_in_box(self):
        env = PointGoal()
        for seed in range(20):
            s = env.reset(seed)
            assert s[0] == 0.0 and s[1] == 0.0
            assert -1.0 <= s[2] <= 1.0 and -1.0 <= s[3] <= 1.0

    def test_goal_fixed_within_episode(self):
        env = PointGoal()
        s = env.reset(5)
        goal = s[2:4].copy()
        rng = np.random.default_rng(2)
        for _ in range(100):
            s, _, _ = env.step(s, int(rng.integers(9)))
            np.testing.assert_array_equal(s[2:4], goal)

    def test_reward_is_progress_plus_bonus(self):
        env = PointGoal()
        s = np.array([0.0, 0.0, 0.2, 0.0])
        s2, r, _ = env.step(s, action_id(+1, 0))
        assert s2[0] == pytest.approx(0.15)
        assert r == pytest.approx(0.2 - 0.05 + 1.0)  # within radius 0.1

    def test_reward_bounds(self):
        env = PointGoal()
        s = env.reset(4)
        rng = np.random.default_rng(3)
        for _ in range(100):
            s, r, _ = env.step(s, int(rng.integers(9)))
            assert -0.3 <= r <= 1.3

    def test_episode_length(self):
        env = PointGoal()
        s = env.reset(0)
        for t in range(100):
            s, _, done = env.step(s, 4)
            assert done == (t == 99)


class TestHelpers:
    def test_make_env(self):
        assert isinstance(make_env("point_runner"), PointRunner)
        assert isinstance(make_env("point_goal"), PointGoal)
        with pytest.raises(ValueError):
            make_env("cartpole")

    def test_render_positions_order_and_length(self):
        transitions = envs.rollout(PointRunner(), lambda s: action_id(+1, 0), seed=0)
        pts = envs.render_positions(transitions)
        assert len(pts) == 200
        xs = [p[0] for p in pts]
        assert xs[1:4] == sorted(xs[1:4]) and xs[3] > xs[1]

    def test_render_single_step(self):
        transitions = envs.rollout(PointRunner(), lambda s: 4, seed=0)
        assert len(envs.render_positions(transitions[:1])) == 1

    def test_render_stationary(self):
        transitions = envs.rollout(PointRunner(), lambda s: action_id(0, 0), seed=0)
        pts = envs.render_positions(transitions)
        assert all(p == pts[0] for p in pts)

    def test_render_empty_rejected(self):
        with pytest.raises(ValueError):
            envs.render_positions([])

    def test_rollout_episode_structure(self):
        transitions = envs.rollout(PointGoal(), lambda s: 4, seed=1, traj_id=3)
        assert len(transitions) == 100
        assert all(t.traj_id == 3 for t in transitions)
        assert [t.step for t in transitions] == list(range(100))
        np.testing.assert_array_equal(transitions[1].state, transitions[0].next_state)
