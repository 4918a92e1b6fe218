"""Shared data types: transitions, trajectories, segments, queries.

The replay buffer stores whole trajectories so that segment sampling
and preference queries can always attribute a segment to the episode
(and skill) it came from. Eviction drops the oldest trajectories in
full; a trajectory is never truncated mid-episode.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np


class NoEligibleTrajectory(RuntimeError):
    """No stored trajectory is long enough to cut a segment from."""


@dataclass
class Transition:
    state: np.ndarray
    action: int
    next_state: np.ndarray
    r_gt: float
    r_hat: float
    skill: np.ndarray
    traj_id: int
    step: int


@dataclass
class Segment:
    """A contiguous slice of one trajectory, exactly the query length."""

    traj_id: int
    start: int
    transitions: list[Transition]

    def __post_init__(self):
        for i, t in enumerate(self.transitions):
            if t.traj_id != self.traj_id or t.step != self.start + i:
                raise ValueError("segment transitions must be contiguous in one trajectory")

    def __len__(self) -> int:
        return len(self.transitions)

    def sum_gt(self) -> float:
        return float(sum(t.r_gt for t in self.transitions))

    def sum_hat(self) -> float:
        return float(sum(t.r_hat for t in self.transitions))

    def states(self) -> np.ndarray:
        return np.stack([t.state for t in self.transitions])

    def actions(self) -> np.ndarray:
        return np.array([t.action for t in self.transitions], dtype=np.int64)


@dataclass
class Trajectory:
    traj_id: int
    transitions: list[Transition]
    skill: np.ndarray

    @property
    def return_gt(self) -> float:
        return float(sum(t.r_gt for t in self.transitions))

    @property
    def return_hat(self) -> float:
        return float(sum(t.r_hat for t in self.transitions))

    def __len__(self) -> int:
        return len(self.transitions)


@dataclass
class Query:
    """A pair of segments shown to a teacher, with their provenance."""

    seg0: Segment
    seg1: Segment
    z0: np.ndarray
    z1: np.ndarray
    traj0_return_gt: float
    traj1_return_gt: float

    def __post_init__(self):
        if self.seg0.traj_id == self.seg1.traj_id:
            raise ValueError("query segments must come from different trajectories")
        if len(self.seg0) != len(self.seg1):
            raise ValueError("query segments must have equal length")


@dataclass
class PreferenceTriple:
    """A labeled query; y is one-hot over (seg0 preferred, seg1 preferred)."""

    query: Query
    y: tuple[float, float]

    def __post_init__(self):
        if tuple(self.y) not in ((1.0, 0.0), (0.0, 1.0)):
            raise ValueError("label must be one-hot over the two segments")


@dataclass
class _TrajRecord:
    traj_id: int
    skill: np.ndarray
    transitions: list[Transition] = field(default_factory=list)
    complete: bool = False


class ReplayBuffer:
    """Trajectory-grouped transition store with whole-trajectory eviction."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._records: OrderedDict[int, _TrajRecord] = OrderedDict()
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def num_trajectories(self) -> int:
        return len(self._records)

    def append(self, t: Transition) -> None:
        """Add one transition; a new traj_id opens a new trajectory."""
        rec = self._records.get(t.traj_id)
        if rec is None:
            rec = _TrajRecord(t.traj_id, t.skill)
            self._records[t.traj_id] = rec
        elif rec.complete:
            raise ValueError(f"trajectory {t.traj_id} is already finished")
        rec.transitions.append(t)
        self._size += 1
        self._evict()

    def finish(self, traj_id: int) -> None:
        self._records[traj_id].complete = True

    def _evict(self) -> None:
        # drop oldest whole trajectories, but never the one being written
        while self._size > self.capacity and len(self._records) > 1:
            _, rec = self._records.popitem(last=False)
            self._size -= len(rec.transitions)

    def trajectories(self, min_len: int = 1) -> list[Trajectory]:
        return [
            Trajectory(rec.traj_id, rec.transitions, rec.skill)
            for rec in self._records.values()
            if len(rec.transitions) >= min_len
        ]

    def transitions(self) -> Iterator[Transition]:
        for rec in self._records.values():
            yield from rec.transitions

    def get(self, traj_id: int) -> Trajectory:
        rec = self._records[traj_id]
        return Trajectory(rec.traj_id, rec.transitions, rec.skill)


def sample_segment(buffer: ReplayBuffer, length: int, rng: np.random.Generator) -> Segment:
    """Uniform trajectory among those long enough, then uniform offset."""
    eligible = buffer.trajectories(min_len=length)
    if not eligible:
        raise NoEligibleTrajectory(f"no stored trajectory has {length} steps")
    traj = eligible[rng.integers(len(eligible))]
    start = int(rng.integers(len(traj) - length + 1))
    return Segment(traj.traj_id, traj.transitions[start].step,
                   traj.transitions[start:start + length])


def sample_window(
    buffer: ReplayBuffer, length: int, rng: np.random.Generator,
    exclude_traj: int | None = None,
) -> Segment:
    """Like sample_segment but can exclude one trajectory (for pairing)."""
    eligible = [t for t in buffer.trajectories(min_len=length)
                if t.traj_id != exclude_traj]
    if not eligible:
        raise NoEligibleTrajectory(f"no stored trajectory has {length} steps")
    traj = eligible[rng.integers(len(eligible))]
    start = int(rng.integers(len(traj) - length + 1))
    return Segment(traj.traj_id, traj.transitions[start].step,
                   traj.transitions[start:start + length])


def relabel(
    buffer: ReplayBuffer,
    reward_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
) -> int:
    """Overwrite every stored r_hat with reward_fn(states, actions).

    Count and order of transitions are untouched; returns how many
    transitions were relabeled. Idempotent for a fixed reward_fn.
    """
    items = list(buffer.transitions())
    if not items:
        return 0
    states = np.stack([t.state for t in items])
    actions = np.array([t.action for t in items], dtype=np.int64)
    rewards = reward_fn(states, actions)
    for t, r in zip(items, rewards):
        t.r_hat = float(r)
    return len(items)
