"""Skill sampling, entropy estimation, intrinsic rewards, and critics."""

import numpy as np
import pytest

from skillpref import skills
from skillpref.envs import PointRunner
from skillpref.nets import AdamState, Mlp
from skillpref.skills import (
    FeatureNet,
    PretrainConfig,
    SkillPolicy,
    SkillSpace,
    SuccessorCritic,
    TooFewParticles,
)


class TestSampleSkill:
    def test_sphere_unit_norm(self):
        space = SkillSpace("sphere", 10)
        rng = np.random.default_rng(0)
        for _ in range(100):
            z = skills.sample_skill(space, rng)
            assert abs(np.linalg.norm(z) - 1.0) <= 1e-9

    def test_discrete_uniform_frequencies(self):
        space = SkillSpace("discrete", 5)
        rng = np.random.default_rng(1)
        counts = np.zeros(5)
        for _ in range(50000):
            counts[np.argmax(skills.sample_skill(space, rng))] += 1
        np.testing.assert_allclose(counts / 50000, 0.2, atol=0.01)

    def test_fixed_seed_reproducible(self):
        space = SkillSpace("sphere", 10)
        a = skills.sample_skill(space, np.random.default_rng(7))
        b = skills.sample_skill(space, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_space_validation(self):
        with pytest.raises(ValueError):
            SkillSpace("gaussian", 10)
        with pytest.raises(ValueError):
            SkillSpace("sphere", 0)


class TestKnnEntropy:
    def test_coincident_particles_give_zero(self):
        h = np.array([1.0, 2.0])
        particles = np.tile(h, (5, 1))
        assert skills.knn_entropy(h, particles, k=3) == 0.0

    def test_single_particle_identity(self):
        h = np.zeros(2)
        particles = np.array([[np.e - 1.0, 0.0]])
        assert skills.knn_entropy(h, particles, k=1) == pytest.approx(1.0)

    def test_two_nearest_of_three(self):
        h = np.zeros(2)
        particles = np.array([[1.0, 0.0], [0.0, 2.0], [3.0, 0.0]])
        # nearest two distances are 1 and 2, mean 1.5
        assert skills.knn_entropy(h, particles, k=2) == pytest.approx(
            np.log(2.5), abs=1e-12
        )
        assert skills.knn_entropy(h, particles, k=2) == pytest.approx(0.9163, abs=5e-5)

    def test_too_few_particles(self):
        with pytest.raises(TooFewParticles):
            skills.knn_entropy(np.zeros(2), np.zeros((2, 2)), k=3)

    def test_nonnegative_and_monotone(self):
        h = np.zeros(2)
        rng = np.random.default_rng(2)
        for _ in range(50):
            base = np.abs(rng.normal(size=(6, 2))) + 0.1
            grown = base * rng.uniform(1.0, 3.0)
            e0 = skills.knn_entropy(h, base, k=3)
            e1 = skills.knn_entropy(h, grown, k=3)
            assert e0 >= 0.0
            assert e1 >= e0 - 1e-12


class FixedFeatures:
    """Feature stub returning a constant unit vector."""

    def __init__(self, f):
        self.f = np.asarray(f, dtype=np.float64)

    def features(self, states):
        return self.f


class TestIntrinsicRewards:
    def test_aligned_feature_no_entropy(self):
        z = np.array([1.0, 0.0])
        stub = FixedFeatures(z)
        particles = np.tile(z, (5, 1))  # zero distances: entropy 0
        r = skills.aps_intrinsic_reward(stub, z, np.zeros(2), particles, k=3, beta=5.0)
        assert r == pytest.approx(1.0)

    def test_orthogonal_feature_no_entropy(self):
        z = np.array([1.0, 0.0])
        f = np.array([0.0, 1.0])
        particles = np.tile(f, (5, 1))
        r = skills.aps_intrinsic_reward(
            FixedFeatures(f), z, np.zeros(2), particles, k=3, beta=5.0
        )
        assert r == pytest.approx(0.0)

    def test_alignment_plus_scaled_entropy(self):
        z = np.array([1.0, 0.0])
        f = np.array([0.5, np.sqrt(0.75)])  # f.z = 0.5
        # particles at distances 1, 2, 3 from f; k=2 gives entropy log 2.5
        dirs = np.array([[0.0, 1.0], [1.0, 0.0], [-1.0, 0.0]])
        particles = f + dirs * np.array([[1.0], [2.0], [3.0]])
        r = skills.aps_intrinsic_reward(
            FixedFeatures(f), z, np.zeros(2), particles, k=2, beta=5.0
        )
        assert r == pytest.approx(0.5 + 5.0 * np.log(2.5), abs=1e-12)
        assert r == pytest.approx(5.0815, abs=5e-4)

    def test_diayn_uniform_discriminator_zero(self):
        disc = Mlp((2, 4), seed=0)
        disc.params = np.zeros_like(disc.params)
        s = np.array([0.3, -0.2])
        for z in range(4):
            assert skills.diayn_intrinsic_reward(disc, s, z) == 0.0

    def test_diayn_saturated_discriminator(self):
        disc = Mlp((2, 4), seed=0)
        disc.params = np.zeros_like(disc.params)
        disc.params[-4] = 60.0  # bias of class 0 dominates
        r = skills.diayn_intrinsic_reward(disc, np.zeros(2), 0)
        assert r == pytest.approx(np.log(4.0), abs=1e-9)
        assert r == pytest.approx(1.3863, abs=5e-5)

    def test_diayn_unlikely_skill_negative(self):
        disc = Mlp((2, 4), seed=0)
        disc.params = np.zeros_like(disc.params)
        disc.params[-4] = 60.0
        assert skills.diayn_intrinsic_reward(disc, np.zeros(2), 1) < 0.0


class TestFeatureNetUpdate:
    def test_perfect_alignment_gives_minus_one(self):
        fn = FeatureNet(state_dim=3, d_z=4, hidden=(8,), seed=3)
        s = np.random.default_rng(3).normal(size=(16, 3))
        zs = fn.features(s)  # targets equal current features
        loss = skills.feature_net_update(fn, s, zs)
        assert loss == pytest.approx(-1.0, abs=1e-9)

    def test_orthogonal_targets_give_zero(self):
        fn = FeatureNet(state_dim=3, d_z=4, hidden=(8,), seed=4)
        rng = np.random.default_rng(4)
        s = rng.normal(size=(16, 3))
        f = fn.features(s)
        zs = rng.normal(size=(16, 4))
        zs -= f * (zs * f).sum(axis=1, keepdims=True)  # project out f
        zs /= np.linalg.norm(zs, axis=1, keepdims=True)
        loss = skills.feature_net_update(fn, s, zs)
        assert loss == pytest.approx(0.0, abs=1e-9)

    def test_repeated_updates_reduce_loss(self):
        fn = FeatureNet(state_dim=3, d_z=4, hidden=(16,), lr=3e-3, seed=5)
        rng = np.random.default_rng(5)
        s = rng.normal(size=(32, 3))
        zs = rng.normal(size=(32, 4))
        zs /= np.linalg.norm(zs, axis=1, keepdims=True)
        first = skills.feature_net_update(fn, s, zs)
        last = first
        for _ in range(200):
            last = skills.feature_net_update(fn, s, zs)
        assert last < first


class TestSuccessorCritic:
    def constant_critic(self, value: float) -> SuccessorCritic:
        critic = SuccessorCritic(1, 2, 1, hidden=(), seed=6)
        critic.net.params = np.zeros_like(critic.net.params)
        critic.net.params[-2:] = value  # output biases
        critic.target.params = critic.net.params.copy()
        return critic

    def batch(self, rewards):
        states = np.array([[0.0], [1.0]])
        return (
            states,
            np.array([0, 1]),
            np.asarray(rewards, dtype=np.float64),
            states,
            np.ones((2, 1)),
        )

    def test_zero_everything_zero_error(self):
        critic = self.constant_critic(0.0)
        loss = skills.successor_critic_update(
            critic, self.batch([0.0, 0.0]), gamma=0.9, alpha=0.2,
            rng=np.random.default_rng(0),
        )
        assert loss == 0.0

    def test_gamma_zero_matching_reward(self):
        critic = self.constant_critic(0.5)
        loss = skills.successor_critic_update(
            critic, self.batch([0.5, 0.5]), gamma=0.0, alpha=0.2,
            rng=np.random.default_rng(0),
        )
        assert loss == pytest.approx(0.0, abs=1e-20)

    def test_target_syncs_after_interval(self):
        critic = SuccessorCritic(1, 2, 1, hidden=(8,), seed=7, sync_every=5)
        rng = np.random.default_rng(1)
        batch = self.batch([1.0, 1.0])
        for _ in range(4):
            skills.successor_critic_update(critic, batch, 0.9, 0.2, rng)
        assert not np.array_equal(critic.target.params, critic.net.params)
        skills.successor_critic_update(critic, batch, 0.9, 0.2, rng)
        np.testing.assert_array_equal(critic.target.params, critic.net.params)

    def test_two_state_mdp_fixed_point(self):
        # constant reward 1, gamma 0.9: Q* = 10 everywhere
        critic = SuccessorCritic(1, 2, 1, hidden=(16, 16), lr=1e-2, seed=8,
                                 sync_every=50)
        states = np.array([[0.0], [0.0], [1.0], [1.0]])
        actions = np.array([0, 1, 0, 1])  # 0: stay, 1: swap
        next_states = np.array([[0.0], [1.0], [1.0], [0.0]])
        batch = (states, actions, np.ones(4), next_states, np.ones((4, 1)))
        rng = np.random.default_rng(2)
        for _ in range(8000):
            skills.successor_critic_update(critic, batch, 0.9, 0.2, rng)
        q = critic.q_values(np.array([[0.0], [1.0]]), np.ones((2, 1)))
        np.testing.assert_allclose(q, 10.0, atol=0.5)


class TestSkillPolicy:
    def test_uniform_q_uniform_actions(self):
        critic = SuccessorCritic(2, 9, 3, hidden=(), seed=9)
        critic.net.params = np.zeros_like(critic.net.params)
        policy = SkillPolicy(critic, alpha=0.2)
        state = np.array([0.5, -0.5])
        z = np.array([1.0, 0.0, 0.0])
        p = policy.action_probs(state, z)
        np.testing.assert_allclose(p, 1.0 / 9.0, atol=1e-12)
        rng = np.random.default_rng(3)
        draws = np.array([policy.action(state, z, rng) for _ in range(50000)])
        freqs = np.bincount(draws, minlength=9) / len(draws)
        np.testing.assert_allclose(freqs, 1.0 / 9.0, atol=0.01)

    def test_low_temperature_approaches_argmax(self):
        critic = SuccessorCritic(2, 4, 2, hidden=(8,), seed=10)
        policy = SkillPolicy(critic, alpha=1e-4)
        state = np.array([0.3, 0.7])
        z = np.array([1.0, 0.0])
        best = int(np.argmax(critic.q_values(state[None], z[None])[0]))
        rng = np.random.default_rng(4)
        assert all(policy.action(state, z, rng) == best for _ in range(100))

    def test_probabilities_sum_to_one(self):
        critic = SuccessorCritic(2, 5, 2, hidden=(8,), seed=11)
        policy = SkillPolicy(critic, alpha=0.2)
        p = policy.action_probs(np.array([1.0, 2.0]), np.array([0.6, 0.8]))
        assert p.sum() == pytest.approx(1.0)
        assert np.all(p > 0)

    def test_reproducible_stream(self):
        critic = SuccessorCritic(2, 4, 2, hidden=(8,), seed=12)
        policy = SkillPolicy(critic, alpha=0.2)
        s, z = np.array([0.1, 0.2]), np.array([1.0, 0.0])
        a = [policy.action(s, z, np.random.default_rng(5)) for _ in range(10)]
        b = [policy.action(s, z, np.random.default_rng(5)) for _ in range(10)]
        assert a == b

    def test_temperature_must_be_positive(self):
        with pytest.raises(ValueError):
            skills.softmax_rows(np.zeros((1, 3)), alpha=0.0)


class TestPretrain:
    def small_config(self, method="aps"):
        return PretrainConfig(
            method=method, batch_size=32, warmup=64, hidden=(16, 16),
            particle_window=256, buffer_capacity=2000,
        )

    def test_single_episode_buffer_contents(self):
        env = PointRunner()
        result = skills.pretrain(
            env, SkillSpace("sphere", 4), steps=200,
            config=self.small_config(), seed=0,
        )
        assert len(result.buffer) == 200
        trajs = result.buffer.trajectories()
        assert len(trajs) == 1
        z0 = trajs[0].transitions[0].skill
        assert all(np.array_equal(t.skill, z0) for t in trajs[0].transitions)
        assert len(result.intrinsic_returns) == 1

    def test_metrics_counts_completed_episodes(self):
        env = PointRunner()
        result = skills.pretrain(
            env, SkillSpace("sphere", 4), steps=500,
            config=self.small_config(), seed=1,
        )
        assert len(result.intrinsic_returns) == 2  # 500 steps, episodes of 200

    def test_diayn_variant_runs(self):
        env = PointRunner()
        result = skills.pretrain(
            env, SkillSpace("discrete", 4), steps=250,
            config=self.small_config("diayn"), seed=2,
        )
        assert result.discriminator is not None
        assert result.feature_net is None
        assert len(result.intrinsic_returns) == 1

    def test_method_space_mismatch_rejected(self):
        env = PointRunner()
        with pytest.raises(ValueError):
            skills.pretrain(env, SkillSpace("discrete", 4), steps=10,
                            config=self.small_config("aps"), seed=0)

    def test_pretrain_deterministic(self):
        env1, env2 = PointRunner(), PointRunner()
        r1 = skills.pretrain(env1, SkillSpace("sphere", 4), steps=250,
                             config=self.small_config(), seed=3)
        r2 = skills.pretrain(env2, SkillSpace("sphere", 4), steps=250,
                             config=self.small_config(), seed=3)
        assert r1.intrinsic_returns == r2.intrinsic_returns
        np.testing.assert_array_equal(
            r1.policy.critic.net.params, r2.policy.critic.net.params
        )
