"""Skill discovery without environment reward, and skill-conditioned policies.

Default method: successor features with particle-entropy exploration
(continuous sphere skills). Alternative: discriminator-based discrete
skills. Both produce the same policy form, a softmax over
Q(s, a, z) = Psi(s, a) . z, so the downstream loop is method-agnostic
(discrete skills are one-hot vectors).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from skillpref import nets
from skillpref.core import ReplayBuffer, Transition
from skillpref.nets import AdamState, Box, Mlp


class TooFewParticles(ValueError):
    """Entropy estimate requested with fewer particles than neighbors."""


@dataclass(frozen=True)
class SkillSpace:
    kind: str  # "sphere" (unit vectors) or "discrete" (one-hot)
    dim: int

    def __post_init__(self):
        if self.kind not in ("sphere", "discrete"):
            raise ValueError(f"unknown skill space kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("skill dimension must be positive")


def sample_skill(space: SkillSpace, rng: np.random.Generator) -> np.ndarray:
    if space.kind == "sphere":
        v = rng.normal(size=space.dim)
        norm = np.linalg.norm(v)
        while norm < 1e-12:
            v = rng.normal(size=space.dim)
            norm = np.linalg.norm(v)
        return v / norm
    onehot = np.zeros(space.dim)
    onehot[int(rng.integers(space.dim))] = 1.0
    return onehot


def knn_entropy(h: np.ndarray, particles: np.ndarray, k: int) -> float:
    """Particle estimate of state novelty: log(1 + mean k-NN distance)."""
    particles = np.asarray(particles)
    if len(particles) < k:
        raise TooFewParticles(f"need at least {k} particles, have {len(particles)}")
    d = np.linalg.norm(particles - h, axis=1)
    nearest = np.partition(d, k - 1)[:k]
    return float(np.log1p(np.mean(nearest)))


class FeatureNet:
    """State features on the unit sphere, aligned with skills in training."""

    def __init__(self, state_dim: int, d_z: int, hidden=(64, 64), lr=5e-4, seed=0):
        self.net = Mlp((state_dim, *hidden, d_z), head="unit", seed=seed)
        self.adam = AdamState(self.net.n_params, lr=lr)

    def features(self, states: np.ndarray) -> np.ndarray:
        return self.net.forward(states)


def aps_intrinsic_reward(
    feature_net: FeatureNet,
    z: np.ndarray,
    s_next: np.ndarray,
    particles: np.ndarray,
    k: int,
    beta: float,
) -> float:
    """Skill alignment plus beta-scaled novelty, both at the next state."""
    f = feature_net.features(s_next)
    return float(f @ z) + beta * knn_entropy(f, particles, k)


def diayn_intrinsic_reward(discriminator: Mlp, s: np.ndarray, z_index: int) -> float:
    """log q(z|s) - log(1/n): positive when the skill is recognizable."""
    logits = discriminator.forward(s)
    n = logits.shape[-1]
    m = logits.max()
    logp = logits - m - np.log(np.exp(logits - m).sum())
    return float(logp[z_index] + np.log(n))


def feature_net_update(
    feature_net: FeatureNet, s_next: np.ndarray, zs: np.ndarray
) -> float:
    """One Adam step on mean(-phi(s') . z); returns the pre-step loss."""

    def loss(p: Box) -> Box:
        return -(feature_net.net.apply(p, s_next) * zs).sum(axis=1).mean()

    value, g = nets.value_and_grad(feature_net.net, loss)
    feature_net.net.params = nets.adam_step(feature_net.adam, feature_net.net.params, g)
    return value


def discriminator_update(
    discriminator: Mlp, adam: AdamState, states: np.ndarray, z_indices: np.ndarray
) -> float:
    """One cross-entropy step on q(z|s); returns the pre-step loss."""
    onehot = np.eye(discriminator.layer_sizes[-1])[z_indices]

    def loss(p: Box) -> Box:
        return -(discriminator.apply(p, states).log_softmax() * onehot).sum() * (
            1.0 / len(states)
        )

    value, g = nets.value_and_grad(discriminator, loss)
    discriminator.params = nets.adam_step(adam, discriminator.params, g)
    return value


class SuccessorCritic:
    """Per-action successor features with a hard-synced target copy."""

    def __init__(
        self,
        state_dim: int,
        action_count: int,
        d_z: int,
        hidden=(64, 64),
        lr: float = 5e-4,
        seed: int = 0,
        sync_every: int = 100,
    ):
        self.action_count = action_count
        self.d_z = d_z
        self.net = Mlp((state_dim, *hidden, action_count * d_z), seed=seed)
        self.target = self.net.clone()
        self.adam = AdamState(self.net.n_params, lr=lr)
        self.sync_every = sync_every
        self._updates = 0

    def q_values(self, states: np.ndarray, zs: np.ndarray) -> np.ndarray:
        """Q(s, a, z) = Psi(s, a) . z for every action: (B, A)."""
        psi = self.net.forward(states).reshape(len(states), self.action_count, self.d_z)
        return np.einsum("bad,bd->ba", psi, zs)

    def target_q(self, states: np.ndarray, actions: np.ndarray, zs: np.ndarray) -> np.ndarray:
        psi = self.target.forward(states).reshape(len(states), self.action_count, self.d_z)
        return (psi[np.arange(len(states)), actions] * zs).sum(axis=1)


def softmax_rows(q: np.ndarray, alpha: float) -> np.ndarray:
    if alpha <= 0:
        raise ValueError("temperature must be positive")
    scaled = (q - q.max(axis=-1, keepdims=True)) / alpha
    e = np.exp(scaled)
    return e / e.sum(axis=-1, keepdims=True)


def successor_critic_update(
    critic: SuccessorCritic,
    batch: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    gamma: float,
    alpha: float,
    rng: np.random.Generator,
) -> float:
    """One TD step toward r + gamma * Q_target(s', a'), a' ~ softmax policy.

    Returns the pre-step mean squared TD error. The target copy
    hard-syncs every sync_every updates.
    """
    states, actions, rewards, next_states, zs = batch
    probs = softmax_rows(critic.q_values(next_states, zs), alpha)
    cum = np.cumsum(probs, axis=1)
    draws = rng.random((len(states), 1))
    next_actions = (draws > cum).sum(axis=1)
    targets = rewards + gamma * critic.target_q(next_states, next_actions, zs)

    def loss(p: Box) -> Box:
        psi = nets.select_blocks(critic.net.apply(p, states), actions, critic.action_count)
        q = (psi * zs).sum(axis=1)
        return (q - targets).square().mean()

    value, g = nets.value_and_grad(critic.net, loss)
    critic.net.params = nets.adam_step(critic.adam, critic.net.params, g)
    critic._updates += 1
    if critic._updates % critic.sync_every == 0:
        critic.target.params = critic.net.params.copy()
    return value


class SkillPolicy:
    """Softmax over successor-feature Q-values at temperature alpha."""

    def __init__(self, critic: SuccessorCritic, alpha: float = 0.2):
        self.critic = critic
        self.alpha = alpha

    def action_probs(self, state: np.ndarray, z: np.ndarray) -> np.ndarray:
        q = self.critic.q_values(state[None, :], z[None, :])[0]
        return softmax_rows(q, self.alpha)

    def action(self, state: np.ndarray, z: np.ndarray, rng: np.random.Generator) -> int:
        p = self.action_probs(state, z)
        return int(rng.choice(len(p), p=p))


def policy_action(
    policy: SkillPolicy, s: np.ndarray, z: np.ndarray, rng: np.random.Generator
) -> int:
    return policy.action(s, z, rng)


@dataclass
class PretrainConfig:
    method: str = "aps"  # or "diayn"
    batch_size: int = 128
    gamma: float = 0.99
    alpha: float = 0.2
    lr: float = 5e-4
    beta: float = 5.0
    knn_k: int = 12
    particle_window: int = 4096
    sync_every: int = 100
    warmup: int = 200
    buffer_capacity: int = 20000
    hidden: tuple = (64, 64)

    def __post_init__(self):
        if self.method not in ("aps", "diayn"):
            raise ValueError(f"unknown pretraining method {self.method!r}")


@dataclass
class PretrainResult:
    policy: SkillPolicy
    feature_net: FeatureNet | None
    discriminator: Mlp | None
    intrinsic_returns: list[float]
    buffer: ReplayBuffer


def pretrain(
    env,
    space: SkillSpace,
    steps: int,
    config: PretrainConfig | None = None,
    seed: int = 0,
) -> PretrainResult:
    """Reward-free pretraining: one skill per episode, intrinsic rewards.

    Intrinsic rewards are computed when a transition is stored (features
    of recently buffered states act as the novelty particle set; until
    k of them exist the novelty term is zero). Feature/discriminator and
    critic updates run once per environment step after warmup.
    """
    cfg = config or PretrainConfig()
    if cfg.method == "aps" and space.kind != "sphere":
        raise ValueError("successor-feature pretraining expects sphere skills")
    if cfg.method == "diayn" and space.kind != "discrete":
        raise ValueError("discriminator pretraining expects discrete skills")
    root = np.random.SeedSequence([seed, 17])
    rng_env, rng_skill, rng_action, rng_batch, rng_init = (
        np.random.default_rng(s) for s in root.spawn(5)
    )
    state_dim = env.spec.state_dim
    net_seed = int(rng_init.integers(2**31))
    critic = SuccessorCritic(
        state_dim, env.spec.action_count, space.dim,
        hidden=cfg.hidden, lr=cfg.lr, seed=net_seed, sync_every=cfg.sync_every,
    )
    policy = SkillPolicy(critic, alpha=cfg.alpha)
    feature_net = None
    discriminator = None
    disc_adam = None
    if cfg.method == "aps":
        feature_net = FeatureNet(state_dim, space.dim, hidden=cfg.hidden,
                                 lr=cfg.lr, seed=net_seed + 1)
    else:
        discriminator = Mlp((state_dim, *cfg.hidden, space.dim), seed=net_seed + 1)
        disc_adam = AdamState(discriminator.n_params, lr=cfg.lr)

    buffer = ReplayBuffer(cfg.buffer_capacity)
    ring: list[Transition] = []  # overwrite-oldest view for O(1) batch sampling
    cursor = 0
    particles: deque[np.ndarray] = deque(maxlen=cfg.particle_window)
    intrinsic_returns: list[float] = []

    state = env.reset(rng_env)
    z = sample_skill(space, rng_skill)
    traj_id = 0
    step_in_ep = 0
    episode_return = 0.0
    for _ in range(steps):
        action = policy.action(state, z, rng_action)
        next_state, r_env, done = env.step(state, action)
        if cfg.method == "aps":
            f = feature_net.features(next_state)
            r_int = float(f @ z)
            if len(particles) >= cfg.knn_k:
                r_int += cfg.beta * knn_entropy(f, np.stack(particles), cfg.knn_k)
            particles.append(f)
        else:
            r_int = diayn_intrinsic_reward(discriminator, next_state, int(np.argmax(z)))
        t = Transition(state, action, next_state, r_env, r_int, z, traj_id, step_in_ep)
        buffer.append(t)
        if len(ring) < cfg.buffer_capacity:
            ring.append(t)
        else:
            ring[cursor] = t
            cursor = (cursor + 1) % cfg.buffer_capacity
        episode_return += r_int

        if len(ring) >= max(cfg.warmup, cfg.batch_size):
            batch = sample_batch(ring, cfg.batch_size, rng_batch)
            if cfg.method == "aps":
                feature_net_update(feature_net, batch[3], batch[4])
            else:
                discriminator_update(
                    discriminator, disc_adam, batch[3], np.argmax(batch[4], axis=1)
                )
            successor_critic_update(critic, batch, cfg.gamma, cfg.alpha, rng_batch)

        state = next_state
        step_in_ep += 1
        if done:
            intrinsic_returns.append(episode_return)
            episode_return = 0.0
            buffer.finish(traj_id)
            traj_id += 1
            step_in_ep = 0
            state = env.reset(rng_env)
            z = sample_skill(space, rng_skill)
    return PretrainResult(policy, feature_net, discriminator, intrinsic_returns, buffer)


def sample_batch(
    transitions, batch_size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Uniform transitions as (states, actions, r_hat, next_states, skills)."""
    idx = rng.integers(len(transitions), size=batch_size)
    picked = [transitions[i] for i in idx]
    return (
        np.stack([t.state for t in picked]),
        np.array([t.action for t in picked], dtype=np.int64),
        np.array([t.r_hat for t in picked]),
        np.stack([t.next_state for t in picked]),
        np.stack([t.skill for t in picked]),
    )
