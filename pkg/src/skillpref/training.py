"""The full training loop: pretrain skills, then learn rewards from queries.

One run is: reward-free skill pretraining, then an online phase where
every feedback_interval steps a session asks the teacher to compare
segment pairs, the reward ensemble retrains on all collected
preferences, and the replay buffer is relabeled with the new ensemble
mean. The skill-conditioned policy trains against relabeled rewards
every step, and at each episode end the acting skill is reset to the
estimator's current best (or, with some probability, to a uniformly
sampled skill so the buffer keeps seeing diverse behavior).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from skillpref.core import (
    NoEligibleTrajectory,
    PreferenceTriple,
    ReplayBuffer,
    Segment,
    Transition,
    relabel,
    sample_window,
)
from skillpref.envs import ENVS, make_env
from skillpref.reward import AugmentConfig, PreferenceDataset, RewardEnsemble, train_ensemble
from skillpref.selection import (
    METHODS,
    TrajectoryEstimator,
    select_queries,
    select_task_skill,
)
from skillpref.skills import (
    PretrainConfig,
    SkillPolicy,
    SkillSpace,
    SuccessorCritic,
    pretrain,
    sample_batch,
    sample_skill,
    successor_critic_update,
)
from skillpref.teacher import (
    PENDING,
    NoisyTeacher,
    NoisyTeacherConfig,
    OracleTeacher,
    RemoteTeacher,
)

TEACHERS = ("oracle", "noisy", "human")


@dataclass(frozen=True)
class RunConfig:
    env_name: str = "point_runner"
    teacher: str = "oracle"
    epsilon: float = 0.1
    teacher_window: int = 10
    label_timeout: float = 60.0
    selection: str = "skill"
    feedback_interval: int = 2000
    queries_per_session: int = 20
    feedback_budget: int = 600
    online_steps: int = 100_000
    pretrain_steps: int = 50_000
    seed: int = 0
    segment_length: int = 50
    precrop_length: int = 60
    skill_kind: str = "sphere"
    skill_dim: int = 10
    pretrain_method: str = "aps"
    n_members: int = 3
    reward_hidden: tuple[int, ...] = (64, 64)
    reward_lr: float = 5e-4
    reward_epochs: int = 50
    reward_batch: int = 32
    surf: bool = True
    surf_mu: int = 4
    surf_tau: float = 0.999
    crop_min: int = 45
    crop_max: int = 55
    estimator_hidden: tuple[int, ...] = (64, 64, 64)
    estimator_lr: float = 5e-4
    estimator_steps: int = 100
    n_z: int = 50
    explore_prob: float = 0.25
    candidate_factor: int = 10
    gamma: float = 0.99
    alpha: float = 0.2
    critic_lr: float = 5e-4
    batch_size: int = 128
    warmup: int = 200
    sync_every: int = 100
    buffer_capacity: int = 20_000
    hidden: tuple[int, ...] = (64, 64)
    beta: float = 5.0
    knn_k: int = 12
    particle_window: int = 4096

    def __post_init__(self):
        if self.env_name not in ENVS:
            raise ValueError(f"unknown env {self.env_name!r}")
        if self.teacher not in TEACHERS:
            raise ValueError(f"unknown teacher {self.teacher!r}")
        if self.selection not in METHODS:
            raise ValueError(f"unknown selection method {self.selection!r}")
        if self.queries_per_session < 1:
            raise ValueError("queries_per_session must be at least 1")
        if self.feedback_budget != 0 and self.feedback_budget < self.queries_per_session:
            raise ValueError("nonzero feedback_budget must cover one session")
        if self.online_steps < 1 or self.pretrain_steps < 0:
            raise ValueError("step counts out of range")
        if self.feedback_interval < 1:
            raise ValueError("feedback_interval must be positive")
        episode_length = make_env(self.env_name).spec.episode_length
        if self.feedback_interval % episode_length != 0:
            raise ValueError("feedback_interval must be a multiple of the episode length")
        if not 1 <= self.segment_length <= episode_length:
            raise ValueError("segment_length must fit inside an episode")
        if not self.crop_min <= self.crop_max <= self.precrop_length:
            raise ValueError("crop bounds must be ordered and fit the source window")
        if not 0.0 <= self.explore_prob <= 1.0:
            raise ValueError("explore_prob must be a probability")
        if self.n_z < 1 or self.candidate_factor < 1:
            raise ValueError("n_z and candidate_factor must be positive")


@dataclass(frozen=True)
class MetricsRow:
    step: int
    return_gt: float
    return_hat: float
    feedback_used: int
    disting_ratio: float
    match_rate: float


@dataclass(frozen=True)
class RunMetrics:
    rows: tuple[MetricsRow, ...]
    pretrain_returns: tuple[float, ...] = ()

    def __post_init__(self):
        used = [row.feedback_used for row in self.rows]
        if any(b < a for a, b in zip(used, used[1:])):
            raise ValueError("feedback_used must be non-decreasing")

    @property
    def feedback_used(self) -> int:
        return self.rows[-1].feedback_used if self.rows else 0

    def final_return_gt(self, last: int = 10) -> float:
        if not self.rows:
            raise ValueError("no completed episodes")
        tail = self.rows[-last:]
        return float(np.mean([row.return_gt for row in tail]))


def _make_teacher(config: RunConfig, seed_seq, mailbox):
    if config.teacher == "oracle":
        return OracleTeacher(seed=seed_seq)
    if config.teacher == "noisy":
        return NoisyTeacher(
            NoisyTeacherConfig(config.epsilon, config.teacher_window, seed=seed_seq)
        )
    return RemoteTeacher(mailbox, config.env_name, timeout=config.label_timeout)


def _oracle_agrees(query, y) -> bool:
    gap = query.seg1.sum_gt() - query.seg0.sum_gt()
    if gap > 0:
        return y == (0.0, 1.0)
    if gap < 0:
        return y == (1.0, 0.0)
    return True


def _source_window(buffer: ReplayBuffer, seg: Segment, precrop: int) -> Segment | None:
    traj = buffer.get(seg.traj_id)
    if len(traj) < precrop:
        return None
    start = seg.start - (precrop - len(seg)) // 2
    start = min(max(start, 0), len(traj) - precrop)
    return Segment(seg.traj_id, start, traj.transitions[start:start + precrop])


def run(config: RunConfig, mailbox=None, status=None) -> RunMetrics:
    """Execute one full training run and return its episode metrics.

    A feedback session fires at every feedback_interval boundary while
    budget remains; sessions before two sufficiently long trajectories
    exist are deferred to the next boundary. An optional status object
    (see the label service) receives progress updates for human runs.
    """
    root = np.random.SeedSequence(config.seed)
    env_ss, teacher_ss, selection_ss, init_ss, train_ss, explore_ss = root.spawn(6)
    env_rng = np.random.default_rng(env_ss)
    selection_rng = np.random.default_rng(selection_ss)
    train_rng = np.random.default_rng(train_ss)
    explore_rng = np.random.default_rng(explore_ss)
    init_ints = init_ss.generate_state(4)

    env = make_env(config.env_name)
    space = SkillSpace(config.skill_kind, config.skill_dim)
    teacher = _make_teacher(config, teacher_ss, mailbox)
    ensemble = RewardEnsemble(
        env.spec.state_dim,
        env.spec.action_count,
        n_members=config.n_members,
        hidden=config.reward_hidden,
        lr=config.reward_lr,
        seed=int(init_ints[0]),
    )
    est = TrajectoryEstimator(
        config.skill_dim,
        hidden=config.estimator_hidden,
        lr=config.estimator_lr,
        seed=int(init_ints[1]),
    )

    pretrain_returns: tuple[float, ...] = ()
    if config.pretrain_steps > 0:
        result = pretrain(
            env,
            space,
            config.pretrain_steps,
            PretrainConfig(
                method=config.pretrain_method,
                batch_size=config.batch_size,
                gamma=config.gamma,
                alpha=config.alpha,
                lr=config.critic_lr,
                beta=config.beta,
                knn_k=config.knn_k,
                particle_window=config.particle_window,
                sync_every=config.sync_every,
                warmup=config.warmup,
                buffer_capacity=config.buffer_capacity,
                hidden=config.hidden,
            ),
            seed=int(init_ints[3]),
        )
        policy = result.policy
        buffer = result.buffer
        for traj in buffer.trajectories():
            buffer.finish(traj.traj_id)
        pretrain_returns = tuple(result.intrinsic_returns)
    else:
        critic = SuccessorCritic(
            env.spec.state_dim,
            env.spec.action_count,
            config.skill_dim,
            hidden=config.hidden,
            lr=config.critic_lr,
            seed=int(init_ints[2]),
            sync_every=config.sync_every,
        )
        policy = SkillPolicy(critic, alpha=config.alpha)
        buffer = ReplayBuffer(config.buffer_capacity)

    # pretraining left intrinsic rewards in r_hat; reward learning owns it now
    relabel(buffer, ensemble.mean_fn())

    ring: list[Transition] = list(buffer.transitions())
    cursor = 0 if len(ring) == config.buffer_capacity else len(ring)
    recent_returns: deque[float] = deque(
        (traj.return_gt for traj in buffer.trajectories()), maxlen=config.teacher_window
    )
    existing = [traj.traj_id for traj in buffer.trajectories()]
    traj_id = max(existing) + 1 if existing else 0

    dataset = PreferenceDataset()
    augment = (
        AugmentConfig(
            mu=config.surf_mu,
            tau_conf=config.surf_tau,
            crop_min=config.crop_min,
            crop_max=config.crop_max,
            precrop=config.precrop_length,
        )
        if config.surf
        else None
    )
    rows: list[MetricsRow] = []
    feedback_used = 0
    queries_issued = 0
    distinguishable_count = 0
    labels_given = 0
    oracle_matches = 0

    def ratios() -> tuple[float, float]:
        disting = distinguishable_count / queries_issued if queries_issued else 1.0
        match = oracle_matches / labels_given if labels_given else 1.0
        return disting, match

    def build_pool(count: int) -> list[tuple[Segment, Segment]]:
        pool = []
        for _ in range(count):
            try:
                first = sample_window(buffer, config.precrop_length, train_rng)
                second = sample_window(
                    buffer, config.precrop_length, train_rng, exclude_traj=first.traj_id
                )
            except NoEligibleTrajectory:
                break
            pool.append((first, second))
        return pool

    def session():
        nonlocal feedback_used, queries_issued, distinguishable_count
        nonlocal labels_given, oracle_matches
        if len(buffer.trajectories(min_len=config.segment_length)) < 2:
            return
        records = [
            (traj.skill, traj.return_hat)
            for traj in buffer.trajectories()
            if traj.skill is not None
        ]
        if len(records) >= 2:
            est.train(records, steps=config.estimator_steps)
        try:
            queries = select_queries(
                config.selection,
                buffer,
                config.segment_length,
                config.candidate_factor * config.queries_per_session,
                config.queries_per_session,
                selection_rng,
                ensemble=ensemble,
                est=est,
            )
        except NoEligibleTrajectory:
            return
        recent = list(recent_returns)
        for query in queries:
            if feedback_used >= config.feedback_budget:
                break
            queries_issued += 1
            if teacher.distinguishable(query, recent):
                distinguishable_count += 1
            outcome = teacher.label(query, recent)
            if outcome is None or outcome is PENDING:
                continue
            y = outcome.y
            labels_given += 1
            if _oracle_agrees(query, y):
                oracle_matches += 1
            src0 = _source_window(buffer, query.seg0, config.precrop_length)
            src1 = _source_window(buffer, query.seg1, config.precrop_length)
            sources = (src0, src1) if src0 is not None and src1 is not None else None
            dataset.add(PreferenceTriple(query, y), sources=sources)
            feedback_used += 1
        if len(dataset) == 0:
            return
        pool = build_pool(config.surf_mu * len(dataset)) if config.surf else None
        train_ensemble(
            ensemble,
            dataset,
            epochs=config.reward_epochs,
            batch_size=config.reward_batch,
            augment=augment,
            pool=pool,
            rng=train_rng,
        )
        relabel(buffer, ensemble.mean_fn())

    state = env.reset(env_rng)
    z = sample_skill(space, explore_rng)
    step_in_ep = 0
    for step in range(config.online_steps):
        if step % config.feedback_interval == 0 and feedback_used < config.feedback_budget:
            session()
        action = policy.action(state, z, env_rng)
        next_state, r_gt, done = env.step(state, action)
        r_hat = float(ensemble.mean_reward(state, [action])[0])
        t = Transition(state, action, next_state, r_gt, r_hat, z, traj_id, step_in_ep)
        buffer.append(t)
        if len(ring) < config.buffer_capacity:
            ring.append(t)
        else:
            ring[cursor] = t
            cursor = (cursor + 1) % config.buffer_capacity
        if len(ring) >= max(config.warmup, config.batch_size):
            batch = sample_batch(ring, config.batch_size, train_rng)
            successor_critic_update(
                policy.critic, batch, config.gamma, config.alpha, train_rng
            )
        state = next_state
        step_in_ep += 1
        if done:
            traj = buffer.get(traj_id)
            buffer.finish(traj_id)
            recent_returns.append(traj.return_gt)
            disting, match = ratios()
            rows.append(
                MetricsRow(
                    step + 1, traj.return_gt, traj.return_hat,
                    feedback_used, disting, match,
                )
            )
            if status is not None:
                status.update(
                    step=step + 1,
                    feedback_used=feedback_used,
                    feedback_budget=config.feedback_budget,
                    latest_return_gt=traj.return_gt,
                )
            if explore_rng.random() < config.explore_prob:
                z = sample_skill(space, explore_rng)
            else:
                z = select_task_skill(est, space, config.n_z, selection_rng)
            state = env.reset(env_rng)
            traj_id += 1
            step_in_ep = 0
    return RunMetrics(tuple(rows), pretrain_returns)


@dataclass(frozen=True)
class AblationCell:
    pretrain_on: bool
    selection: str
    surf: bool
    metrics: RunMetrics


def ablate(config: RunConfig, toggles: dict | None = None, mailbox=None) -> list[AblationCell]:
    """Run the component grid with a shared seed; one cell per combination.

    toggles may override any of the axes, e.g. {"surf": (True, False)};
    defaults are pretrain on/off crossed with skill vs disagreement
    selection at the base config's SURF setting.
    """
    toggles = toggles or {}
    pretrain_axis = tuple(toggles.get("pretrain", (True, False)))
    selection_axis = tuple(toggles.get("selection", ("skill", "disagreement")))
    surf_axis = tuple(toggles.get("surf", (config.surf,)))
    if True in pretrain_axis and config.pretrain_steps == 0:
        raise ValueError("base config has no pretraining steps to toggle on")
    cells = []
    for pre_on in pretrain_axis:
        for method in selection_axis:
            for surf_on in surf_axis:
                cell_config = replace(
                    config,
                    pretrain_steps=config.pretrain_steps if pre_on else 0,
                    selection=method,
                    surf=surf_on,
                )
                cells.append(
                    AblationCell(pre_on, method, surf_on, run(cell_config, mailbox=mailbox))
                )
    return cells
