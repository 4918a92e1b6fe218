"""Preference teachers: ideal oracle, noisy scripted, and remote human.

The oracle prefers the segment with the larger ground-truth reward sum.
The noisy teacher answers at random whenever the two source
trajectories' returns differ by less than epsilon times the average
recent return; otherwise it defers to the oracle on segment sums. The
remote teacher forwards rendered queries to a mailbox a human answers
through the labeling service.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skillpref import envs
from skillpref.core import Query


class ServiceUnavailable(RuntimeError):
    """Remote labeling requested without a running mailbox."""


class Pending:
    """Sentinel: no human label arrived within the timeout."""

    def __repr__(self):
        return "Pending"


PENDING = Pending()


@dataclass(frozen=True)
class NoisyTeacherConfig:
    epsilon: float = 0.1
    window: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.window < 1:
            raise ValueError("window must be at least 1")


@dataclass(frozen=True)
class LabelOutcome:
    y: tuple[float, float]
    was_random: bool


def oracle_label(query: Query, rng: np.random.Generator) -> LabelOutcome:
    """Prefer the segment with larger ground-truth sum; tie -> fair coin."""
    s0 = query.seg0.sum_gt()
    s1 = query.seg1.sum_gt()
    if s0 == s1:
        y = (1.0, 0.0) if rng.random() < 0.5 else (0.0, 1.0)
        return LabelOutcome(y, was_random=True)
    return LabelOutcome((1.0, 0.0) if s0 > s1 else (0.0, 1.0), was_random=False)


def recent_average(recent_returns: list[float], window: int) -> float:
    if not recent_returns:
        raise ValueError("need at least one completed trajectory return")
    tail = recent_returns[-window:]
    return float(np.mean(tail))


def is_distinguishable(
    query: Query, recent_returns: list[float], config: NoisyTeacherConfig
) -> bool:
    """True when the trajectory-return gap clears the noise threshold.

    The comparison is strict: a gap exactly at epsilon * R_avg is
    distinguishable.
    """
    r_avg = recent_average(recent_returns, config.window)
    gap = abs(query.traj0_return_gt - query.traj1_return_gt)
    return not gap < config.epsilon * r_avg


def noisy_label(
    query: Query,
    recent_returns: list[float],
    config: NoisyTeacherConfig,
    rng: np.random.Generator,
) -> LabelOutcome:
    """Random below the return-gap threshold, oracle on segment sums above."""
    if not is_distinguishable(query, recent_returns, config):
        y = (1.0, 0.0) if rng.random() < 0.5 else (0.0, 1.0)
        return LabelOutcome(y, was_random=True)
    return oracle_label(query, rng)


class OracleTeacher:
    """Stateful wrapper owning the tie-break stream."""

    def __init__(self, seed: int = 0):
        self._rng = np.random.default_rng(seed)

    def label(self, query: Query, recent_returns: list[float]) -> LabelOutcome:
        return oracle_label(query, self._rng)

    def distinguishable(self, query: Query, recent_returns: list[float]) -> bool:
        return True


class NoisyTeacher:
    """Stateful wrapper around noisy_label with the configured stream."""

    def __init__(self, config: NoisyTeacherConfig):
        self.config = config
        self._rng = np.random.default_rng(config.seed)

    def label(self, query: Query, recent_returns: list[float]) -> LabelOutcome:
        return noisy_label(query, recent_returns, self.config, self._rng)

    def distinguishable(self, query: Query, recent_returns: list[float]) -> bool:
        return is_distinguishable(query, recent_returns, self.config)


class RemoteTeacher:
    """Bridges queries to a human through the label-service mailbox.

    The mailbox owns skip/re-queue bookkeeping: a query skipped three
    times comes back as dropped (None); no label within the timeout
    comes back as PENDING so the trainer can withdraw the query.
    """

    def __init__(self, mailbox, env_name: str, timeout: float = 60.0):
        if mailbox is None:
            raise ServiceUnavailable("no label mailbox attached")
        self.mailbox = mailbox
        self.env_name = env_name
        self.timeout = timeout

    def label(self, query: Query, recent_returns: list[float]):
        choice = self.mailbox.request_label(
            left=envs.render_positions(query.seg0),
            right=envs.render_positions(query.seg1),
            env=self.env_name,
            step_count=len(query.seg0),
            timeout=self.timeout,
        )
        if choice == "left":
            return LabelOutcome((1.0, 0.0), was_random=False)
        if choice == "right":
            return LabelOutcome((0.0, 1.0), was_random=False)
        if choice == "dropped":
            return None
        return PENDING

    def distinguishable(self, query: Query, recent_returns: list[float]) -> bool:
        return True
