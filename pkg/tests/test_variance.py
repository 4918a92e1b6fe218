"""Disagreement-variance analysis against quadrature and hand oracles."""

import math

import numpy as np
import pytest

from skillpref.variance import (
    LAMBDA,
    DisagreementModel,
    SweepRow,
    mc_disagreement,
    monotonicity_sweep,
    probit_variance,
)


def hand_probit(delta, c):
    """Same closed form written independently with math, not numpy."""
    t = math.sqrt(1.0 + 2.0 * (math.pi / 8.0) * c * c)
    mu = 1.0 / (1.0 + math.exp(-delta / t))
    return mu * (1.0 - mu) * (1.0 - 1.0 / t)


def quadrature_variance(delta, c, nodes=120):
    """True Var[sigmoid(gap)] for gap ~ N(delta, 2 c^2), via Gauss-Hermite."""
    y, w = np.polynomial.hermite.hermgauss(nodes)
    gap = delta + math.sqrt(2.0) * (math.sqrt(2.0) * c) * y
    s = 1.0 / (1.0 + np.exp(-gap))
    e1 = float((w * s).sum() / math.sqrt(math.pi))
    e2 = float((w * s * s).sum() / math.sqrt(math.pi))
    return e2 - e1 * e1


class TestModel:
    def test_lambda_value(self):
        assert LAMBDA == pytest.approx(math.sqrt(math.pi / 8.0), rel=1e-12)

    def test_t_and_mu(self):
        model = DisagreementModel(delta=1.0, c=1.0)
        assert model.t == pytest.approx(math.sqrt(1.0 + math.pi / 4.0), rel=1e-12)
        assert model.mu_s == pytest.approx(1.0 / (1.0 + math.exp(-1.0 / model.t)))

    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            DisagreementModel(delta=-0.1, c=1.0)
        with pytest.raises(ValueError):
            DisagreementModel(delta=1.0, c=0.0)
        with pytest.raises(ValueError):
            DisagreementModel(delta=1.0, c=1.0, m=1)


class TestProbitVariance:
    def test_pinned_value(self):
        assert probit_variance(1.0, 1.0) == pytest.approx(0.0549, abs=5e-4)

    def test_matches_hand_formula(self):
        for delta in (0.0, 0.3, 1.0, 2.5):
            for c in (0.2, 1.0, 3.0):
                assert probit_variance(delta, c) == pytest.approx(
                    hand_probit(delta, c), rel=1e-12
                )

    def test_zero_noise_means_zero_variance(self):
        assert probit_variance(1.0, 0.0) == 0.0
        assert probit_variance(0.0, 0.0) == 0.0

    def test_peak_at_zero_gap(self):
        t = math.sqrt(1.0 + math.pi / 4.0)
        assert probit_variance(0.0, 1.0) == pytest.approx(
            0.25 * (1.0 - 1.0 / t), rel=1e-12
        )

    def test_decreasing_in_gap(self):
        values = [probit_variance(d, 1.0) for d in np.linspace(0.0, 5.0, 21)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_increasing_in_noise(self):
        values = [probit_variance(1.0, c) for c in (0.1, 0.5, 1.0, 2.0)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_rejects_negative_noise(self):
        with pytest.raises(ValueError):
            probit_variance(1.0, -1.0)


class TestMcDisagreement:
    def test_unbiased_for_true_variance(self):
        model = DisagreementModel(delta=0.0, c=1.0, m=3)
        mc = mc_disagreement(model, 50_000, np.random.default_rng(0))
        assert mc == pytest.approx(quadrature_variance(0.0, 1.0), abs=3e-3)

    def test_matches_quadrature_at_moderate_gap(self):
        model = DisagreementModel(delta=1.0, c=0.5, m=5)
        mc = mc_disagreement(model, 50_000, np.random.default_rng(1))
        assert mc == pytest.approx(quadrature_variance(1.0, 0.5), abs=3e-3)

    def test_huge_gap_kills_disagreement(self):
        model = DisagreementModel(delta=50.0, c=1.0)
        mc = mc_disagreement(model, 10_000, np.random.default_rng(2))
        assert mc < 1e-6

    def test_probit_tracks_mc_within_band(self):
        for delta in (0.0, 0.5, 1.0, 2.0):
            model = DisagreementModel(delta=delta, c=1.0, m=3)
            mc = mc_disagreement(model, 50_000, np.random.default_rng(3))
            assert abs(mc - probit_variance(delta, 1.0)) <= 0.02

    def test_deterministic_under_seed(self):
        model = DisagreementModel(delta=0.7, c=1.3)
        a = mc_disagreement(model, 5_000, np.random.default_rng(9))
        b = mc_disagreement(model, 5_000, np.random.default_rng(9))
        assert a == b

    def test_rejects_tiny_trial_count(self):
        model = DisagreementModel(delta=1.0, c=1.0)
        with pytest.raises(ValueError):
            mc_disagreement(model, 10, np.random.default_rng(0))


class TestMonotonicitySweep:
    def test_clean_sweep_has_no_violations(self):
        result = monotonicity_sweep(
            c=1.0, deltas=np.linspace(0.0, 4.0, 9), trials=20_000, seed=4
        )
        assert result.ok
        assert len(result.rows) == 9
        probit = [row.probit_var for row in result.rows]
        assert all(b < a for a, b in zip(probit, probit[1:]))

    def test_repeated_grid_value_is_not_a_violation(self):
        result = monotonicity_sweep(
            c=1.0, deltas=[1.0, 1.0, 1.0], trials=5_000, seed=5
        )
        assert result.ok
        assert result.rows[0].mc_var == result.rows[2].mc_var

    def test_rows_carry_both_columns(self):
        result = monotonicity_sweep(
            c=0.5, deltas=[0.0, 1.0, 2.0], trials=5_000, seed=6
        )
        for row in result.rows:
            assert isinstance(row, SweepRow)
            assert row.c == 0.5
            assert 0.0 <= row.mc_var <= 0.25
            assert row.probit_var == pytest.approx(hand_probit(row.delta, 0.5))

    def test_rejects_short_or_descending_grid(self):
        with pytest.raises(ValueError):
            monotonicity_sweep(c=1.0, deltas=[0.0, 1.0], trials=5_000)
        with pytest.raises(ValueError):
            monotonicity_sweep(c=1.0, deltas=[2.0, 1.0, 0.0], trials=5_000)

    def test_deterministic_under_seed(self):
        a = monotonicity_sweep(c=1.0, deltas=[0.0, 1.0, 2.0], trials=5_000, seed=7)
        b = monotonicity_sweep(c=1.0, deltas=[0.0, 1.0, 2.0], trials=5_000, seed=7)
        assert a == b
