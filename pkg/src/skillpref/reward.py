"""Ensemble Bradley-Terry reward learning with segment-crop augmentation.

A preference between two equal-length segments is modeled as
sigmoid(sum of learned rewards on one minus the other). Three small
nets with tanh heads train on the labeled pairs; augmentation adds
(a) random equal-length crops of labeled pairs that inherit the label
and (b) confidently pseudo-labeled pairs from an unlabeled pool.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from skillpref import nets
from skillpref.core import PreferenceTriple, Segment
from skillpref.nets import AdamState, Box, Mlp

Scorer = Callable[[np.ndarray, np.ndarray], np.ndarray]


class CropLongerThanSegment(ValueError):
    """Requested crop length exceeds the source segment."""


@dataclass
class LabeledPair:
    """Training unit: two equal-length segments and a one-hot label."""

    seg0: Segment
    seg1: Segment
    y: tuple[float, float]

    def __post_init__(self):
        if len(self.seg0) != len(self.seg1):
            raise ValueError("paired segments must have equal length")
        if tuple(self.y) not in ((1.0, 0.0), (0.0, 1.0)):
            raise ValueError("label must be one-hot")


class PreferenceDataset:
    """Labeled preference triples plus the longer windows they came from.

    Queries use fixed-length segments; crops need a little slack around
    them, so each triple may carry the wider source pair it was cut
    from. Insertion order is preserved.
    """

    def __init__(self):
        self._triples: list[PreferenceTriple] = []
        self._sources: list[tuple[Segment, Segment] | None] = []

    def add(
        self,
        triple: PreferenceTriple,
        sources: tuple[Segment, Segment] | None = None,
    ) -> None:
        self._triples.append(triple)
        self._sources.append(sources)

    def __len__(self) -> int:
        return len(self._triples)

    @property
    def triples(self) -> list[PreferenceTriple]:
        return list(self._triples)

    def labeled_pairs(self) -> list[LabeledPair]:
        return [LabeledPair(t.query.seg0, t.query.seg1, t.y) for t in self._triples]

    def crop_sources(self) -> list[tuple[Segment, Segment, tuple[float, float]]]:
        """Widest available pair per triple, falling back to the segments."""
        out = []
        for triple, src in zip(self._triples, self._sources):
            if src is not None:
                out.append((src[0], src[1], triple.y))
            else:
                out.append((triple.query.seg0, triple.query.seg1, triple.y))
        return out


@dataclass
class AugmentConfig:
    mu: int = 4
    tau_conf: float = 0.999
    crop_min: int = 45
    crop_max: int = 55
    precrop: int = 60


class RewardEnsemble:
    """Three independently seeded (state + one-hot action) -> reward nets."""

    def __init__(
        self,
        state_dim: int,
        action_count: int,
        n_members: int = 3,
        hidden: Sequence[int] = (64, 64),
        lr: float = 5e-4,
        seed: int = 0,
    ):
        self.state_dim = state_dim
        self.action_count = action_count
        sizes = (state_dim + action_count, *hidden, 1)
        self._member_seeds = [
            int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
            for i in range(n_members)
        ]
        self.members = [Mlp(sizes, head="tanh", seed=s) for s in self._member_seeds]
        self.adams = [AdamState(m.n_params, lr=lr) for m in self.members]
        self._train_calls = 0

    def __len__(self) -> int:
        return len(self.members)

    def encode(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        onehot = np.eye(self.action_count)[np.asarray(actions, dtype=np.int64)]
        return np.concatenate([states, onehot], axis=1)

    def member_reward(self, i: int, states, actions) -> np.ndarray:
        return self.members[i].forward(self.encode(states, actions))[:, 0]

    def mean_reward(self, states, actions) -> np.ndarray:
        x = self.encode(states, actions)
        return np.mean([m.forward(x)[:, 0] for m in self.members], axis=0)

    def member_fn(self, i: int) -> Scorer:
        return lambda states, actions: self.member_reward(i, states, actions)

    def mean_fn(self) -> Scorer:
        return self.mean_reward


def segment_return_hat(scorer: Scorer, segment: Segment) -> float:
    """Sum of learned per-step rewards over one segment."""
    if len(segment) == 0:
        raise ValueError("segment is empty")
    return float(np.sum(scorer(segment.states(), segment.actions())))


def bt_probability(scorer: Scorer, seg0: Segment, seg1: Segment) -> float:
    """P[seg1 preferred over seg0] under the Bradley-Terry model."""
    if len(seg0) != len(seg1):
        raise ValueError("segments must have equal length")
    diff = segment_return_hat(scorer, seg1) - segment_return_hat(scorer, seg0)
    return float(nets.stable_sigmoid(diff))


def _as_pair(item) -> LabeledPair:
    if isinstance(item, LabeledPair):
        return item
    if isinstance(item, PreferenceTriple):
        return LabeledPair(item.query.seg0, item.query.seg1, item.y)
    raise TypeError(f"cannot train on {type(item).__name__}")


def ce_loss_and_grad(
    ensemble: RewardEnsemble, member_index: int, batch: Sequence
) -> tuple[float, np.ndarray]:
    """Cross-entropy over preference pairs and its exact member gradient.

    Pairs may have different lengths; each pair is internally
    equal-length so the sum comparison stays unbiased.
    """
    pairs = [_as_pair(item) for item in batch]
    if not pairs:
        raise ValueError("batch is empty")
    states = np.concatenate(
        [s for p in pairs for s in (p.seg0.states(), p.seg1.states())]
    )
    actions = np.concatenate(
        [a for p in pairs for a in (p.seg0.actions(), p.seg1.actions())]
    )
    sizes = np.array([n for p in pairs for n in (len(p.seg0), len(p.seg1))])
    # sign +1 when seg1 is preferred: loss becomes -log sigmoid(sign * (S1-S0))
    signs = np.array([1.0 if p.y == (0.0, 1.0) else -1.0 for p in pairs])
    x = ensemble.encode(states, actions)
    member = ensemble.members[member_index]

    def loss(p: Box) -> Box:
        r = member.apply(p, x).reshape(-1)
        sums = nets.segment_sums(r, sizes).reshape(len(pairs), 2)
        z = (sums * np.array([-1.0, 1.0])).sum(axis=1)
        return -(z * signs).log_sigmoid().mean()

    return nets.value_and_grad(member, loss)


def surf_augment(
    ensemble: RewardEnsemble,
    dataset: PreferenceDataset,
    pool: Sequence[tuple[Segment, Segment]] | None,
    rng: np.random.Generator,
    config: AugmentConfig | None = None,
) -> list[LabeledPair]:
    """Cropped copies of labeled pairs plus confident pseudo-labels.

    Each labeled pair yields one crop: a shared random length in
    [crop_min, crop_max] with an independent offset per segment,
    inheriting the parent label. Up to mu * len(dataset) pool pairs are
    pseudo-labeled when the ensemble-mean preference clears tau_conf on
    either side; the rest are discarded.
    """
    cfg = config or AugmentConfig()
    out: list[LabeledPair] = []
    sources = dataset.crop_sources()
    for src0, src1, y in sources:
        length = int(rng.integers(cfg.crop_min, cfg.crop_max + 1))
        if length > len(src0) or length > len(src1):
            raise CropLongerThanSegment(
                f"crop of {length} from segments of {len(src0)}/{len(src1)}"
            )
        out.append(LabeledPair(_crop(src0, length, rng), _crop(src1, length, rng), y))
    if pool:
        mean = ensemble.mean_fn()
        for seg0, seg1 in list(pool)[: cfg.mu * len(sources)]:
            p = bt_probability(mean, seg0, seg1)
            if p >= cfg.tau_conf:
                out.append(LabeledPair(seg0, seg1, (0.0, 1.0)))
            elif 1.0 - p >= cfg.tau_conf:
                out.append(LabeledPair(seg0, seg1, (1.0, 0.0)))
    return out


def _crop(seg: Segment, length: int, rng: np.random.Generator) -> Segment:
    offset = int(rng.integers(len(seg) - length + 1))
    return Segment(
        seg.traj_id,
        seg.transitions[offset].step,
        seg.transitions[offset:offset + length],
    )


def train_ensemble(
    ensemble: RewardEnsemble,
    dataset: PreferenceDataset,
    epochs: int,
    batch_size: int,
    augment: AugmentConfig | None = None,
    pool: Sequence[tuple[Segment, Segment]] | None = None,
    rng: np.random.Generator | None = None,
) -> list[list[float]]:
    """Train every member independently; returns per-member loss history.

    Augmented data is built once per call and shared by all members.
    Each member shuffles with a stream derived from its own init seed,
    so identically seeded members follow identical trajectories.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    data: list[LabeledPair] = dataset.labeled_pairs()
    if augment is not None:
        aug_rng = rng if rng is not None else np.random.default_rng(0)
        data = data + surf_augment(ensemble, dataset, pool, aug_rng, augment)
    histories: list[list[float]] = []
    for i, member in enumerate(ensemble.members):
        stream = np.random.default_rng(
            np.random.SeedSequence([ensemble._member_seeds[i], ensemble._train_calls])
        )
        history = []
        for _ in range(epochs):
            order = stream.permutation(len(data))
            losses = []
            for lo in range(0, len(order), batch_size):
                batch = [data[j] for j in order[lo:lo + batch_size]]
                loss, g = ce_loss_and_grad(ensemble, i, batch)
                member.params = nets.adam_step(ensemble.adams[i], member.params, g)
                losses.append(loss)
            history.append(float(np.mean(losses)))
        histories.append(history)
    ensemble._train_calls += 1
    return histories
