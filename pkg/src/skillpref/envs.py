"""Deterministic 2-D point environments with ground-truth rewards.

PointRunner rewards sustained forward velocity (a locomotion stand-in);
PointGoal rewards progress toward a sampled goal (a manipulation
stand-in). Both use the same 9-action grid over {-1, 0, +1}^2 so
policies stay softmax-over-Q throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from skillpref.core import Segment, Trajectory, Transition


class InvalidAction(ValueError):
    """Action id outside the environment's discrete grid."""


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_count: int
    episode_length: int
    dt: float
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.action_count < 2:
            raise ValueError("need at least two actions")


def action_delta(action: int, action_count: int = 9) -> np.ndarray:
    """Map an action id to its (dx, dy) grid vector in {-1,0,+1}^2."""
    if not 0 <= action < action_count:
        raise InvalidAction(f"action {action} not in [0, {action_count})")
    return np.array([action // 3 - 1.0, action % 3 - 1.0])


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


class PointRunner:
    """Velocity-clamped point mass rewarded for running along +x.

    Reward is clamp(vx' / v_target, 0, 1), mirroring speed-tolerance
    locomotion rewards, so faster segments are genuinely preferable.
    """

    A_MAX = 1.0
    V_MAX = 2.0
    V_TARGET = 1.5

    spec = EnvSpec(
        name="point_runner",
        state_dim=4,
        action_count=9,
        episode_length=200,
        dt=0.1,
        bounds=(
            (-np.inf, np.inf),
            (-np.inf, np.inf),
            (-V_MAX, V_MAX),
            (-V_MAX, V_MAX),
        ),
    )

    def __init__(self):
        self._t = 0

    def reset(self, seed) -> np.ndarray:
        rng = _as_rng(seed)
        self._t = 0
        pos = rng.uniform(-0.01, 0.01, size=2)
        return np.array([pos[0], pos[1], 0.0, 0.0])

    def step(self, state, action: int) -> tuple[np.ndarray, float, bool]:
        accel = action_delta(action) * self.A_MAX
        v = np.clip(state[2:4] + accel * self.spec.dt, -self.V_MAX, self.V_MAX)
        p = state[0:2] + v * self.spec.dt
        r = float(np.clip(v[0] / self.V_TARGET, 0.0, 1.0))
        self._t += 1
        done = self._t >= self.spec.episode_length
        return np.concatenate([p, v]), r, done


class PointGoal:
    """Point mass stepped directly in position toward a per-episode goal.

    Reward is potential-shaped distance progress plus a success bonus
    inside the goal radius; the goal never moves within an episode.
    """

    SPEED = 0.15
    RADIUS = 0.1

    spec = EnvSpec(
        name="point_goal",
        state_dim=4,
        action_count=9,
        episode_length=100,
        dt=1.0,
        bounds=(
            (-np.inf, np.inf),
            (-np.inf, np.inf),
            (-1.0, 1.0),
            (-1.0, 1.0),
        ),
    )

    def __init__(self):
        self._t = 0

    def reset(self, seed) -> np.ndarray:
        rng = _as_rng(seed)
        self._t = 0
        goal = rng.uniform(-1.0, 1.0, size=2)
        return np.array([0.0, 0.0, goal[0], goal[1]])

    def step(self, state, action: int) -> tuple[np.ndarray, float, bool]:
        delta = action_delta(action) * self.SPEED
        goal = state[2:4]
        before = float(np.linalg.norm(state[0:2] - goal))
        p = state[0:2] + delta
        after = float(np.linalg.norm(p - goal))
        r = (before - after) + (1.0 if after < self.RADIUS else 0.0)
        self._t += 1
        done = self._t >= self.spec.episode_length
        return np.concatenate([p, goal]), r, done


ENVS = {"point_runner": PointRunner, "point_goal": PointGoal}


def make_env(name: str):
    if name not in ENVS:
        raise ValueError(f"unknown env {name!r}; choose from {sorted(ENVS)}")
    return ENVS[name]()


def render_positions(trajectory) -> list[tuple[float, float]]:
    """One (x, y) per transition, in step order, for client-side playback."""
    if isinstance(trajectory, (Trajectory, Segment)):
        transitions: Sequence[Transition] = trajectory.transitions
    else:
        transitions = list(trajectory)
    if not transitions:
        raise ValueError("cannot render an empty trajectory")
    return [(float(t.state[0]), float(t.state[1])) for t in transitions]


def rollout(
    env,
    policy_fn,
    seed,
    traj_id: int = 0,
    skill: np.ndarray | None = None,
) -> list[Transition]:
    """Run one full episode; policy_fn maps state to an action id."""
    if skill is None:
        skill = np.zeros(1)
    state = env.reset(seed)
    transitions = []
    done = False
    step = 0
    while not done:
        action = int(policy_fn(state))
        next_state, r, done = env.step(state, action)
        transitions.append(
            Transition(state, action, next_state, r, 0.0, skill, traj_id, step)
        )
        state = next_state
        step += 1
    return transitions
