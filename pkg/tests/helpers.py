"""Shared test utilities: finite-difference oracles and segment builders."""

import numpy as np

from skillpref.core import PreferenceTriple, Query, Segment, Transition
from skillpref.training import RunConfig


def tiny_run_config(**overrides) -> RunConfig:
    """A full-loop config small enough for sub-second test runs."""
    base = dict(
        env_name="point_runner",
        teacher="oracle",
        selection="uniform",
        feedback_interval=200,
        queries_per_session=2,
        feedback_budget=6,
        online_steps=1000,
        pretrain_steps=0,
        seed=1,
        segment_length=20,
        precrop_length=24,
        crop_min=18,
        crop_max=22,
        skill_dim=4,
        n_members=2,
        reward_hidden=(8,),
        reward_epochs=2,
        reward_batch=8,
        surf=False,
        estimator_hidden=(8,),
        estimator_steps=5,
        n_z=5,
        explore_prob=0.25,
        candidate_factor=2,
        batch_size=16,
        warmup=16,
        hidden=(8,),
        buffer_capacity=5000,
        particle_window=64,
        knn_k=4,
    )
    base.update(overrides)
    return RunConfig(**base)


def fd_grad(f, params: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of a flat vector."""
    g = np.zeros_like(params)
    for i in range(params.size):
        p_hi = params.copy()
        p_lo = params.copy()
        p_hi[i] += h
        p_lo[i] -= h
        g[i] = (f(p_hi) - f(p_lo)) / (2.0 * h)
    return g


def max_rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / (np.abs(a) + np.abs(b) + 1e-6)))


def make_segment(traj_id: int, values, state_dim: int = 2, start: int = 0) -> Segment:
    """Segment whose first state component and r_gt both equal the value."""
    transitions = []
    for i, v in enumerate(values):
        state = np.zeros(state_dim)
        state[0] = v
        transitions.append(
            Transition(state, i % 3, state, float(v), 0.0, np.zeros(2), traj_id, start + i)
        )
    return Segment(traj_id, start, transitions)


def value_scorer(states, actions):
    return states[:, 0]


def make_triple(v0, v1, traj_ids=(0, 1)) -> PreferenceTriple:
    seg0 = make_segment(traj_ids[0], v0)
    seg1 = make_segment(traj_ids[1], v1)
    z = np.array([1.0, 0.0])
    y = (1.0, 0.0) if sum(v0) > sum(v1) else (0.0, 1.0)
    return PreferenceTriple(Query(seg0, seg1, z, z, sum(v0), sum(v1)), y)


def make_query(
    v0,
    v1,
    traj0_return: float | None = None,
    traj1_return: float | None = None,
    traj_ids=(0, 1),
) -> Query:
    seg0 = make_segment(traj_ids[0], v0)
    seg1 = make_segment(traj_ids[1], v1)
    z = np.array([1.0, 0.0])
    r0 = float(sum(v0)) if traj0_return is None else traj0_return
    r1 = float(sum(v1)) if traj1_return is None else traj1_return
    return Query(seg0, seg1, z, z, r0, r1)
