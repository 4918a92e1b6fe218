"""Desk-scale laboratory for skill-driven preference-based RL.

The package is organized around a single online loop (``training.run``):
skill pretraining without rewards, preference queries answered by a
scripted or human teacher, a learned reward ensemble, and policy
optimization against the learned reward. ``variance`` holds the
numerical study of label disagreement that motivates the query
selection rule.
"""

from skillpref.core import (
    PreferenceTriple,
    Query,
    ReplayBuffer,
    Segment,
    Trajectory,
    Transition,
)
from skillpref.training import AblationCell, MetricsRow, RunConfig, RunMetrics, ablate, run

__all__ = [
    "AblationCell",
    "MetricsRow",
    "PreferenceTriple",
    "Query",
    "ReplayBuffer",
    "RunConfig",
    "RunMetrics",
    "Segment",
    "Trajectory",
    "Transition",
    "ablate",
    "run",
]
