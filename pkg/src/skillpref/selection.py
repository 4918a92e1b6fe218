"""Query selection: uniform, ensemble disagreement, and the skill criterion.

The skill criterion scores a candidate pair by how far apart the two
source skills' estimated returns are (easy for a noisy teacher to
distinguish) times how uncertain the reward ensemble is about it
(informative). Both terms are min-max normalized per candidate batch
and shifted by one, so scores live in [1, 4].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skillpref import reward as reward_mod
from skillpref.core import NoEligibleTrajectory, Query, ReplayBuffer, sample_segment, sample_window
from skillpref.nets import AdamState, Box, Mlp
from skillpref import nets
from skillpref.skills import SkillSpace, sample_skill

METHODS = ("uniform", "disagreement", "skill")


class DegenerateTargets(ValueError):
    """All raw targets identical: min-max normalization is undefined."""


def normalize_targets(raw: np.ndarray) -> np.ndarray:
    """Min-max map to [0,1]; raises when the spread is zero."""
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = float(raw.min()), float(raw.max())
    if hi == lo:
        raise DegenerateTargets("all targets equal; nothing to normalize")
    return (raw - lo) / (hi - lo)


def _minmax_or_zero(raw: np.ndarray) -> np.ndarray:
    try:
        return normalize_targets(raw)
    except DegenerateTargets:
        return np.zeros_like(np.asarray(raw, dtype=np.float64))


class TrajectoryEstimator:
    """Skill vector -> estimated trajectory return, trained on [0,1] targets."""

    def __init__(self, d_z: int, hidden=(64, 64, 64), lr: float = 5e-4, seed: int = 0):
        self.net = Mlp((d_z, *hidden, 1), seed=seed)
        self.adam = AdamState(self.net.n_params, lr=lr)
        self.target_min: float | None = None
        self.target_max: float | None = None
        self.last_targets: np.ndarray | None = None

    def predict(self, zs: np.ndarray) -> np.ndarray:
        zs = np.atleast_2d(zs)
        return self.net.forward(zs)[:, 0]

    def train(self, records: list[tuple[np.ndarray, float]], steps: int = 100) -> float:
        """Full-batch Adam on squared error against normalized returns.

        All-equal raw returns fall back to a constant 0.5 target.
        Returns the final mean squared error.
        """
        if len(records) < 2:
            raise ValueError("need at least two trajectory records")
        zs = np.stack([z for z, _ in records])
        raw = np.array([ret for _, ret in records])
        self.target_min, self.target_max = float(raw.min()), float(raw.max())
        try:
            targets = normalize_targets(raw)
        except DegenerateTargets:
            targets = np.full(len(raw), 0.5)
        self.last_targets = targets
        y = targets[:, None]
        value = 0.0
        for _ in range(steps):
            def loss(p: Box) -> Box:
                return (self.net.apply(p, zs) - y).square().mean()

            value, g = nets.value_and_grad(self.net, loss)
            self.net.params = nets.adam_step(self.adam, self.net.params, g)
        return value


def disagreement_score(ensemble, query: Query) -> float:
    """Population variance of member preference probabilities."""
    if len(ensemble) < 2:
        raise ValueError("disagreement needs at least two members")
    probs = np.array([
        reward_mod.bt_probability(ensemble.member_fn(i), query.seg0, query.seg1)
        for i in range(len(ensemble))
    ])
    return float(probs.var())


@dataclass
class CandidateBatch:
    queries: list[Query]
    skill_gap: np.ndarray | None = None  # raw |R(z0) - R(z1)|
    uncertainty: np.ndarray | None = None  # raw disagreement variance
    a_norm: np.ndarray | None = None
    b_norm: np.ndarray | None = None
    criterion: np.ndarray | None = None


def skill_criterion(batch: CandidateBatch, ensemble, est: TrajectoryEstimator) -> CandidateBatch:
    """Score I = (1 + a)(1 + b) with per-batch normalized a and b."""
    if len(batch.queries) < 2:
        raise ValueError("criterion normalization needs at least two candidates")
    z0 = np.stack([q.z0 for q in batch.queries])
    z1 = np.stack([q.z1 for q in batch.queries])
    batch.skill_gap = np.abs(est.predict(z0) - est.predict(z1))
    batch.uncertainty = np.array(
        [disagreement_score(ensemble, q) for q in batch.queries]
    )
    batch.a_norm = _minmax_or_zero(batch.skill_gap)
    batch.b_norm = _minmax_or_zero(batch.uncertainty)
    batch.criterion = (1.0 + batch.a_norm) * (1.0 + batch.b_norm)
    return batch


def sample_candidates(
    buffer: ReplayBuffer, length: int, n: int, rng: np.random.Generator
) -> list[Query]:
    """N segment pairs from distinct trajectories, with their provenance."""
    out = []
    for _ in range(n):
        seg0 = sample_segment(buffer, length, rng)
        seg1 = sample_window(buffer, length, rng, exclude_traj=seg0.traj_id)
        t0 = buffer.get(seg0.traj_id)
        t1 = buffer.get(seg1.traj_id)
        out.append(Query(seg0, seg1, t0.skill, t1.skill, t0.return_gt, t1.return_gt))
    return out


def _top_m(queries: list[Query], scores: np.ndarray, m: int) -> list[Query]:
    order = np.argsort(-scores, kind="stable")[:m]
    return [queries[i] for i in order]


def select_queries(
    method: str,
    buffer: ReplayBuffer,
    length: int,
    n: int,
    m: int,
    rng: np.random.Generator,
    ensemble=None,
    est: TrajectoryEstimator | None = None,
) -> list[Query]:
    """Sample N candidates, score them per method, return the top M."""
    if method not in METHODS:
        raise ValueError(f"unknown selection method {method!r}")
    candidates = sample_candidates(buffer, length, n, rng)
    if method == "uniform" or m >= n:
        return candidates[:m]
    if method == "disagreement":
        scores = np.array([disagreement_score(ensemble, q) for q in candidates])
        return _top_m(candidates, scores, m)
    scored = skill_criterion(CandidateBatch(candidates), ensemble, est)
    return _top_m(candidates, scored.criterion, m)


def select_task_skill(
    est: TrajectoryEstimator, space: SkillSpace, n_z: int, rng: np.random.Generator
) -> np.ndarray:
    """Best of n_z sampled skills under the estimator; ties pick the first."""
    zs = np.stack([sample_skill(space, rng) for _ in range(n_z)])
    values = est.predict(zs)
    return zs[int(np.argmax(values))]
