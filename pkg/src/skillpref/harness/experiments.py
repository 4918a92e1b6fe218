"""The three measurement recipes behind the shipped figures.

matchrate_experiment: how often a noisy teacher agrees with the oracle
as a function of the return gap between the compared trajectories.
distinguish_experiment: fraction of issued queries the noisy teacher
can answer non-randomly, for skill-based vs disagreement selection.
prop1_experiment: disagreement variance, Monte Carlo vs closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from skillpref.core import Query, Segment
from skillpref.envs import make_env, rollout
from skillpref.teacher import NoisyTeacher, NoisyTeacherConfig, oracle_label, recent_average
from skillpref.training import RunConfig, run
from skillpref.variance import SweepResult, monotonicity_sweep

ACCELERATE_X = 7  # action id for (dx, dy) = (+1, 0)
COAST = 4  # action id for (dx, dy) = (0, 0)


@dataclass(frozen=True)
class BucketRate:
    bucket_lo: float
    bucket_hi: float
    match_rate: float
    n: int


@dataclass(frozen=True)
class DistinguishResult:
    seeds: tuple[int, ...]
    skill_by_seed: tuple[float, ...]
    disagreement_by_seed: tuple[float, ...]

    @property
    def skill_ratio(self) -> float:
        return float(np.mean(self.skill_by_seed))

    @property
    def disagreement_ratio(self) -> float:
        return float(np.mean(self.disagreement_by_seed))


def duty_cycle_policy(duty: float):
    """Scripted controller: accelerate +x on a fixed fraction of steps."""
    if not 0.0 <= duty <= 1.0:
        raise ValueError("duty cycle must be in [0, 1]")
    err = 0.0

    def policy(state):
        nonlocal err
        err += duty
        if err >= 1.0:
            err -= 1.0
            return ACCELERATE_X
        return COAST

    return policy


def graded_trajectories(env_name: str, duties, rng) -> list[list]:
    """One full episode per duty cycle; returns transition lists."""
    env = make_env(env_name)
    return [
        rollout(env, duty_cycle_policy(d), rng, traj_id=i)
        for i, d in enumerate(duties)
    ]


def default_edges(threshold: float) -> tuple[float, ...]:
    """Gap-bucket edges straddling the teacher's randomness threshold."""
    return (
        0.0,
        0.5 * threshold,
        threshold,
        2.0 * threshold,
        4.0 * threshold,
    )


def matchrate_experiment(
    env_name: str,
    epsilon: float,
    samples: int,
    seed: int = 0,
    edges=None,
    segment_length: int = 50,
    n_duties: int = 41,
) -> list[BucketRate]:
    """Per-bucket oracle agreement of the noisy teacher.

    Trajectories of graded speed are rolled with scripted policies, and
    query pairs are drawn so the trajectory-return gap lands in each
    bucket. The teacher's reference return is the grade-family mean, so
    its randomness threshold is epsilon times that mean.
    """
    root = np.random.SeedSequence([seed, 23])
    roll_ss, pick_ss, teacher_ss, oracle_ss = root.spawn(4)
    trajectories = graded_trajectories(
        env_name, np.linspace(0.0, 1.0, n_duties), np.random.default_rng(roll_ss)
    )
    returns = [sum(t.r_gt for t in traj) for traj in trajectories]
    recent = [float(np.mean(returns))]
    threshold = epsilon * recent_average(recent, window=10)
    if edges is None:
        edges = default_edges(threshold)
    edges = [float(e) for e in edges]
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bucket edges must be strictly ascending")

    gaps = []
    for i in range(len(trajectories)):
        for j in range(len(trajectories)):
            if returns[i] > returns[j]:
                gaps.append((returns[i] - returns[j], i, j))
    buckets: list[list[tuple[int, int]]] = [[] for _ in edges[:-1]]
    for gap, i, j in gaps:
        for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
            if lo <= gap < hi:
                buckets[k].append((i, j))
                break

    pick_rng = np.random.default_rng(pick_ss)
    oracle_rng = np.random.default_rng(oracle_ss)
    teacher = NoisyTeacher(NoisyTeacherConfig(epsilon, window=10, seed=teacher_ss))

    def segment_of(traj_index: int) -> Segment:
        # segments start at step 0: the graded ramps differ there, while
        # late windows of two fast trajectories can tie at saturation
        traj = trajectories[traj_index]
        return Segment(traj_index, 0, traj[:segment_length])

    rates = []
    for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
        if not buckets[k]:
            raise ValueError(f"no trajectory pair has a return gap in [{lo}, {hi})")
        matches = 0
        for _ in range(samples):
            i, j = buckets[k][int(pick_rng.integers(len(buckets[k])))]
            if pick_rng.random() < 0.5:
                i, j = j, i
            query = Query(
                segment_of(i), segment_of(j),
                z0=None, z1=None,
                traj0_return_gt=returns[i], traj1_return_gt=returns[j],
            )
            answered = teacher.label(query, recent)
            truth = oracle_label(query, oracle_rng)
            matches += answered.y == truth.y
        rates.append(BucketRate(lo, hi, matches / samples, samples))
    return rates


def distinguish_experiment(config: RunConfig, seeds) -> DistinguishResult:
    """Final distinguishable-query ratio per selection method, per seed."""
    seeds = tuple(int(s) for s in seeds)
    by_method = {}
    for method in ("skill", "disagreement"):
        ratios = []
        for seed in seeds:
            metrics = run(replace(config, selection=method, seed=seed))
            if not metrics.rows:
                raise ValueError("run produced no completed episodes")
            ratios.append(metrics.rows[-1].disting_ratio)
        by_method[method] = tuple(ratios)
    return DistinguishResult(seeds, by_method["skill"], by_method["disagreement"])


def prop1_experiment(c_values, deltas, trials: int, seed: int = 0) -> list[SweepResult]:
    return [monotonicity_sweep(float(c), deltas, trials, seed=seed) for c in c_values]
