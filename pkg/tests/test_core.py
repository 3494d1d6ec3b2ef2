import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shipcal.core import (DiscreteDistribution, EmpiricalPredictiveCDF,
                          MixtureDistribution, ProbabilityInterval, cdf_eval,
                          central_interval, dist_from_dict, dumps_canonical,
                          quantile)
from shipcal.errors import DomainError


def cps(scores, tau=0.5, **kw):
    return EmpiricalPredictiveCDF(np.asarray(scores, dtype=float), tau, **kw)


class TestCdfEval:
    def test_interior_interval_branch(self):
        assert cdf_eval(cps([4, 5, 7]), 4.5) == pytest.approx(0.375)

    def test_below_all_scores(self):
        assert cdf_eval(cps([4, 5, 7]), 3.0) == pytest.approx(0.125)

    def test_tie_branch(self):
        assert cdf_eval(cps([4, 5, 5, 7], tau=0.0), 5.0) == pytest.approx(0.2)

    def test_point_mass(self):
        assert cdf_eval(DiscreteDistribution.point_mass(0.0), 0.0) == 1.0

    def test_mixture_is_weighted_average(self):
        a, b = cps([1, 2, 3]), cps([0, 4])
        mix = MixtureDistribution(np.array([0.3, 0.7]), (a, b))
        for y in (-1.0, 0.5, 2.0, 3.5, 10.0):
            expected = 0.3 * a.cdf(y) + 0.7 * b.cdf(y)
            assert mix.cdf(y) == pytest.approx(expected, abs=1e-12)


class TestQuantile:
    def test_exact_level_set_infimum(self):
        assert quantile(cps([4, 5, 7]), 0.5) == 5.0

    def test_upper_clamp(self):
        assert quantile(cps([4, 5, 7]), 1.0) == 7.0

    def test_jump_at_first_score(self):
        assert quantile(cps([4, 5, 7]), 0.25) == 4.0

    def test_lower_clamp(self):
        assert quantile(cps([4, 5, 7]), 0.0) == 4.0

    def test_discrete_smallest_cumulative_hit(self):
        d = DiscreteDistribution(np.array([-1.0, 0.0, 2.0]),
                                 np.array([0.25, 0.5, 0.25]))
        assert d.quantile(0.2) == -1.0
        assert d.quantile(0.25) == -1.0
        assert d.quantile(0.3) == 0.0
        assert d.quantile(1.0) == 2.0

    def test_rejects_out_of_range_level(self):
        with pytest.raises(DomainError):
            quantile(cps([1, 2]), 1.5)


class TestCentralInterval:
    def test_half_confidence(self):
        assert central_interval(cps([4, 5, 7]), 0.5) == (4.0, 7.0)

    def test_point_mass_degenerate(self):
        pm = DiscreteDistribution.point_mass(0.0)
        assert central_interval(pm, 0.9) == (0.0, 0.0)

    def test_identical_scores(self):
        assert central_interval(cps([1, 1, 1, 1]), 0.9) == (1.0, 1.0)

    def test_rejects_bad_confidence(self):
        with pytest.raises(DomainError):
            central_interval(cps([1, 2]), 1.0)


class TestInvariantConstruction:
    def test_unsorted_scores_rejected(self):
        with pytest.raises(DomainError):
            cps([3, 1, 2])

    def test_empty_scores_rejected(self):
        with pytest.raises(DomainError):
            cps([])

    def test_bad_tau_rejected(self):
        with pytest.raises(DomainError):
            cps([1, 2], tau=1.5)

    def test_probs_must_sum_to_one(self):
        with pytest.raises(DomainError):
            DiscreteDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.6]))

    def test_negative_mixture_weight_rejected(self):
        with pytest.raises(DomainError):
            MixtureDistribution(np.array([-0.1, 1.1]),
                                (cps([1]), cps([2])))

    def test_probability_interval_ordering(self):
        with pytest.raises(DomainError):
            ProbabilityInterval(0.8, 0.2)


scores_strategy = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False, width=32),
    min_size=1, max_size=40)


@settings(max_examples=200, deadline=None)
@given(scores=scores_strategy,
       tau=st.floats(min_value=0, max_value=1),
       y1=st.floats(min_value=-12, max_value=12),
       y2=st.floats(min_value=-12, max_value=12))
def test_cdf_monotone_and_in_range(scores, tau, y1, y2):
    d = cps(sorted(scores), tau)
    lo, hi = sorted((y1, y2))
    f_lo, f_hi = d.cdf(lo), d.cdf(hi)
    assert 0.0 <= f_lo <= f_hi <= 1.0


@settings(max_examples=200, deadline=None)
@given(scores=scores_strategy,
       tau=st.floats(min_value=0, max_value=1),
       q=st.floats(min_value=0, max_value=1))
def test_quantile_galois_connection(scores, tau, q):
    d = cps(sorted(scores), tau)
    v = d.quantile(q)
    assert d.scores[0] <= v <= d.scores[-1]
    if q <= d.cdf_right_many(np.array([d.scores[-1]]))[0]:
        assert d.cdf(v + 1e-9) >= q - 1e-12


@settings(max_examples=100, deadline=None)
@given(scores=scores_strategy,
       weights=st.lists(st.floats(min_value=0.01, max_value=1),
                        min_size=2, max_size=4),
       y=st.floats(min_value=-12, max_value=12))
def test_mixture_cdf_matches_weighted_sum(scores, weights, y):
    w = np.asarray(weights)
    w /= w.sum()
    comps = tuple(cps(sorted(scores), tau) for tau in
                  np.linspace(0.1, 0.9, w.size))
    mix = MixtureDistribution(w, comps)
    expected = sum(wi * c.cdf(y) for wi, c in zip(w, comps))
    assert mix.cdf(y) == pytest.approx(expected, abs=1e-12)


class TestSerialization:
    def test_cps_round_trip(self):
        d = cps([0.1, 1.7, 2.30000000000001], tau=0.25, upper_closed=True)
        doc = json.loads(dumps_canonical(d.to_dict()))
        back = dist_from_dict(doc)
        assert np.array_equal(back.scores, d.scores)
        assert back.tau == d.tau and back.upper_closed

    def test_mixture_round_trip(self):
        mix = MixtureDistribution(
            np.array([0.25, 0.75]),
            (DiscreteDistribution.point_mass(0.0), cps([1, 2, 3])))
        back = dist_from_dict(json.loads(dumps_canonical(mix.to_dict())))
        for y in (-1.0, 0.0, 1.5, 4.0):
            assert back.cdf(y) == mix.cdf(y)

    def test_field_order_and_precision_fixed(self):
        text = dumps_canonical(cps([1.0, 2.5], tau=0.5).to_dict())
        assert text == '{"kind":"cps","version":1,"scores":[1,2.5],"tau":0.5}'

    def test_none_serializes_as_null(self):
        assert dumps_canonical({"late_rmse": None}) == '{"late_rmse":null}'

    def test_seventeen_significant_digits(self):
        value = 0.1234567890123456789
        text = dumps_canonical({"v": value})
        assert json.loads(text)["v"] == value
