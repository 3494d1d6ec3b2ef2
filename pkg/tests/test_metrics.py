import numpy as np
import pytest

from shipcal.core import (DiscreteDistribution, EmpiricalPredictiveCDF,
                          MixtureDistribution)
from shipcal.errors import DomainError
from shipcal.metrics import (PL_LEVELS, crps, evaluate, interval_metrics,
                             pinball_and_mqce, point_metrics, quantile_matrix)


def cps(scores, tau=0.5):
    return EmpiricalPredictiveCDF(np.asarray(scores, dtype=float), tau)


GRID_STEP = 1e-4


def crps_numeric(dist, y, du=GRID_STEP):
    """Riemann-sum oracle on the 1e-4 grid.

    With every support point and y aligned to multiples of du, the CDF is
    constant on each grid cell, so evaluating at cell midpoints integrates
    the step function exactly up to float rounding.
    """
    lo, hi = dist.support_bounds
    left = min(lo, y) - 1.0
    right = max(hi, y) + 1.0
    u = np.arange(left + du / 2, right, du)
    f = dist.cdf_many(u)
    f = np.where(u < lo, 0.0, np.where(u > hi, 1.0, f))
    return float(np.sum((f - (u >= y)) ** 2) * du)


def _random_dist(rng):
    kind = rng.integers(3)
    if kind == 0:
        scores = np.sort(np.round(rng.uniform(-5, 5, rng.integers(1, 12)), 4))
        return cps(scores, float(rng.uniform()))
    if kind == 1:
        support = np.unique(np.round(rng.uniform(-5, 5, rng.integers(1, 6)), 4))
        probs = rng.dirichlet(np.ones(support.size))
        return DiscreteDistribution(support, probs)
    comps = tuple(_random_dist(rng) for _ in range(2))
    w = rng.dirichlet(np.ones(2))
    return MixtureDistribution(w, comps)


class TestCrps:
    def test_perfect_point_mass(self):
        assert crps(DiscreteDistribution.point_mass(2.0), 2.0) == 0.0

    def test_point_mass_reduces_to_absolute_error(self):
        assert crps(DiscreteDistribution.point_mass(3.0), 1.0) == \
            pytest.approx(2.0, abs=1e-12)

    def test_two_atom_hand_value(self):
        dist = DiscreteDistribution(np.array([0.0, 2.0]), np.array([0.5, 0.5]))
        assert crps(dist, 0.0) == pytest.approx(0.5, abs=1e-12)
        assert crps_numeric(dist, 0.0) == pytest.approx(0.5, abs=1e-9)

    def test_point_mass_absolute_error_many(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            c = float(np.round(rng.uniform(-5, 5), 4))
            y = float(np.round(rng.uniform(-5, 5), 4))
            assert crps(DiscreteDistribution.point_mass(c), y) == \
                pytest.approx(abs(c - y), abs=1e-12)

    def test_matches_numeric_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            dist = _random_dist(rng)
            y = float(np.round(rng.uniform(-6, 6), 4))
            assert crps(dist, y) == pytest.approx(crps_numeric(dist, y),
                                                  abs=1e-6)


class TestPinballAndMqce:
    def test_exact_quantiles_give_zero_pl(self):
        preds = np.full((1, 9), 2.0)
        pl, _ = pinball_and_mqce(preds, [2.0])
        assert pl == 0.0

    def test_median_pinball_term(self):
        # only the q=0.5 column differs from the label
        preds = np.full((1, 9), 2.0)
        preds[0, 4] = 1.0  # q = 0.5 predicts 1, label is 2
        pl, _ = pinball_and_mqce(preds, [2.0])
        assert pl == pytest.approx(0.5 * 1.0 / 9, abs=1e-12)

    def test_all_overshooting_quantiles_mqce(self):
        preds = np.full((1, 9), 5.0)
        _, mqce = pinball_and_mqce(preds, [2.0])
        assert mqce == pytest.approx(0.5, abs=1e-12)

    def test_tie_counts_as_not_covered(self):
        preds = np.full((1, 9), 2.0)
        _, mqce = pinball_and_mqce(preds, [2.0])
        # coverage 0 at every level: mean of q over the nine levels
        assert mqce == pytest.approx(float(np.mean(PL_LEVELS)), abs=1e-12)

    def test_pl_non_negative(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            preds = np.sort(rng.normal(size=(5, 9)), axis=1)
            pl, _ = pinball_and_mqce(preds, rng.normal(size=5))
            assert pl >= 0.0

    def test_wrong_shape_rejected(self):
        with pytest.raises(DomainError):
            pinball_and_mqce(np.zeros((2, 8)), [0.0, 1.0])


class TestPointMetrics:
    def test_perfect_predictions(self):
        out = point_metrics([1, -2, 0], [1, -2, 0])
        assert (out["accuracy"], out["rmse"], out["mae"]) == (1.0, 0.0, 0.0)

    def test_two_row_hand_computation(self):
        out = point_metrics([0, 1], [1, 1])
        assert out["accuracy"] == 0.5
        assert out["rmse"] == pytest.approx(np.sqrt(0.5))
        assert out["mae"] == 0.5
        assert out["late_detection_rate"] == 0.5
        assert out["late_rmse"] == pytest.approx(np.sqrt(0.5))

    def test_no_late_rows_reports_absent(self):
        out = point_metrics([0, -1], [-1, -2])
        assert out["late_detection_rate"] is None
        assert out["late_rmse"] is None
        assert out["late_mae"] is None

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            point_metrics([], [])


class TestIntervalMetrics:
    def test_full_coverage(self):
        dists = [cps([-2, 0, 2])] * 3
        out = interval_metrics(dists, [0.0, 0.0, 0.0])
        assert out[0.8]["coverage"] == 1.0

    def test_half_coverage_hand_case(self):
        a = DiscreteDistribution(np.array([0.0, 2.0]), np.array([0.5, 0.5]))
        b = DiscreteDistribution(np.array([1.0, 3.0]), np.array([0.5, 0.5]))
        out = interval_metrics([a, b], [2.0, 0.0], levels=(0.8,))
        assert out[0.8]["coverage"] == 0.5  # y=2 inclusive, y=0 below [1,3]
        assert out[0.8]["mean_size"] == 2.0

    def test_degenerate_intervals(self):
        dists = [DiscreteDistribution.point_mass(v) for v in (1.0, -1.0)]
        out = interval_metrics(dists, [1.0, -1.0], levels=(0.9,))
        assert out[0.9]["coverage"] == 1.0
        assert out[0.9]["mean_size"] == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        dists = [_random_dist(rng) for _ in range(12)]
        labels = rng.integers(-3, 4, 12).astype(float)
        base = interval_metrics(dists, labels)
        perm = rng.permutation(12)
        shuffled = interval_metrics([dists[i] for i in perm], labels[perm])
        for level in base:
            assert shuffled[level] == base[level]


class TestEvaluate:
    def test_report_round_trip_fields(self):
        dists = [cps([-1, 0, 1]), DiscreteDistribution.point_mass(2.0)]
        report = evaluate(dists, [0.0, 2.0], [0, 2])
        doc = report.to_dict()
        assert doc["accuracy"] == 1.0
        assert doc["crps"] >= 0.0
        assert set(doc["intervals"]) == {"80", "90", "95"}
        assert "mqce_tie_convention" in doc

    def test_quantile_matrix_shape(self):
        assert quantile_matrix([cps([0, 1])]).shape == (1, 9)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(DomainError):
            evaluate([cps([0.0])], [0.0, 1.0], [0, 1])
