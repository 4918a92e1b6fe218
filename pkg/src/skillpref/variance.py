"""Why hard-to-distinguish pairs attract disagreement-based selection.

An ensemble of reward estimators, each seeing the true segment returns
through Gaussian noise of scale c, disagrees most when the true return
gap is smallest. This module checks that claim two independent ways:
brute-force Monte Carlo over noisy ensembles, and the closed form
obtained by approximating the sigmoid with a probit,

    Var[P] ~= mu_s (1 - mu_s) (1 - 1/t),   t = sqrt(1 + 2 lambda^2 c^2),

with mu_s = sigmoid(delta / t) and lambda = sqrt(pi / 8). c is the
per-estimator standard deviation (the gap then has std c * sqrt(2)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skillpref.nets import stable_sigmoid

LAMBDA = float(np.sqrt(np.pi / 8.0))


@dataclass(frozen=True)
class DisagreementModel:
    delta: float  # true return gap r1 - r2, >= 0
    c: float  # estimator noise std, > 0
    m: int = 3  # ensemble size

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.c <= 0:
            raise ValueError("noise scale must be positive")
        if self.m < 2:
            raise ValueError("a sample variance needs at least two members")

    @property
    def t(self) -> float:
        return float(np.sqrt(1.0 + 2.0 * LAMBDA**2 * self.c**2))

    @property
    def mu_s(self) -> float:
        return float(stable_sigmoid(self.delta / self.t))


def probit_variance(delta: float, c: float) -> float:
    """Closed-form approximation of the ensemble preference variance."""
    if c < 0:
        raise ValueError("noise scale must be non-negative")
    t = float(np.sqrt(1.0 + 2.0 * LAMBDA**2 * c**2))
    mu = float(stable_sigmoid(delta / t))
    return mu * (1.0 - mu) * (1.0 - 1.0 / t)


def mc_disagreement(
    model: DisagreementModel, trials: int, rng: np.random.Generator
) -> float:
    """Monte-Carlo estimate of Var over members of sigmoid(r1_hat - r2_hat).

    Each trial draws m independent (r1_hat, r2_hat) pairs around
    (delta, 0) with std c, takes the sample variance (divisor m-1) of
    the m preferences, and the result averages over trials.
    """
    if trials < 1000:
        raise ValueError("too few trials for a stable estimate")
    r1 = rng.normal(model.delta, model.c, size=(trials, model.m))
    r2 = rng.normal(0.0, model.c, size=(trials, model.m))
    prefs = stable_sigmoid(r1 - r2)
    return float(prefs.var(axis=1, ddof=1).mean())


@dataclass(frozen=True)
class SweepRow:
    delta: float
    c: float
    mc_var: float
    probit_var: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    violations: tuple[tuple[float, float], ...]  # (delta_lo, delta_hi) pairs

    @property
    def ok(self) -> bool:
        return not self.violations


def monotonicity_sweep(
    c: float,
    deltas,
    trials: int,
    seed: int = 0,
    m: int = 3,
    tolerance: float = 1e-3,
) -> SweepResult:
    """Estimate both variance columns over a gap grid and flag reversals.

    A violation is an adjacent pair where the Monte-Carlo variance
    INCREASES with delta by more than the tolerance. Every grid point
    reuses the same seed (common random numbers), so the noise largely
    cancels in adjacent differences.
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3:
        raise ValueError("grid needs at least three points")
    if any(b < a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("grid must be ascending")
    rows = []
    for d in deltas:
        model = DisagreementModel(delta=d, c=c, m=m)
        mc = mc_disagreement(model, trials, np.random.default_rng(seed))
        rows.append(SweepRow(d, c, mc, probit_variance(d, c)))
    violations = [
        (lo.delta, hi.delta)
        for lo, hi in zip(rows, rows[1:])
        if hi.mc_var > lo.mc_var + tolerance
    ]
    return SweepResult(tuple(rows), tuple(violations))
