import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shipcal.errors import DomainError
from shipcal.isotonic import pava, step_eval


def isotonic_oracle(scores, targets, weights=None, grid_step=1e-3):
    """Independent constrained-least-squares minimizer on a level grid.

    Dynamic program over non-decreasing level assignments drawn from a
    uniform grid on [0, 1]; exact on the grid, no adjacent-violator
    merging shared with the implementation under test.
    """
    scores = np.asarray(scores, dtype=float)
    targets = np.asarray(targets, dtype=float)
    weights = np.ones_like(scores) if weights is None else np.asarray(weights)
    # the fit is a function of the score, so tied scores share one level;
    # grouping by weighted mean is an exact reformulation of the objective
    uniq, inverse = np.unique(scores, return_inverse=True)
    w_grouped = np.bincount(inverse, weights=weights)
    t_grouped = np.bincount(inverse, weights=weights * targets) / w_grouped
    scores, targets, weights = uniq, t_grouped, w_grouped
    grid = np.arange(0.0, 1.0 + grid_step / 2, grid_step)
    # best[g] = minimal cost of the prefix given the current level is grid[g]
    best = weights[0] * (grid - targets[0]) ** 2
    choice = []
    for t, w in zip(targets[1:], weights[1:]):
        prefix = np.minimum.accumulate(best)
        choice.append(np.array([int(np.argmin(best[:g + 1]))
                                for g in range(grid.size)]))
        best = prefix + w * (grid - t) ** 2
    levels = np.empty(scores.size)
    g = int(np.argmin(best))
    levels[-1] = grid[g]
    for i in range(scores.size - 2, -1, -1):
        g = choice[i][g]
        levels[i] = grid[g]
    return scores, levels


class TestPavaExamples:
    def test_single_violation_pools_tail(self):
        fit = pava([1, 2, 3], [0, 1, 0])
        assert np.allclose(fit.levels, [0.0, 0.5, 0.5])

    def test_already_monotone_is_identity(self):
        assert np.allclose(pava([1, 2], [0, 1]).levels, [0.0, 1.0])

    def test_single_violator_pool(self):
        assert np.allclose(pava([1, 2], [1, 0]).levels, [0.5, 0.5])

    def test_equal_score_pre_pooling(self):
        fit = pava([1, 1], [0, 1])
        assert np.array_equal(fit.breakpoints, [1.0])
        assert np.allclose(fit.levels, [0.5])

    def test_empty_input_rejected(self):
        with pytest.raises(DomainError):
            pava([], [])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(DomainError):
            pava([1, 2], [0, 1], [1.0, 0.0])


class TestStepEval:
    def setup_method(self):
        self.fit = pava([1, 2, 3], [0, 1, 0])

    def test_exact_breakpoint(self):
        assert step_eval(self.fit, 2.0) == 0.5

    def test_left_block_convention(self):
        assert step_eval(self.fit, 2.7) == 0.5

    def test_below_range_clamp(self):
        assert step_eval(self.fit, 0.0) == 0.0


def test_oracle_equivalence_binary_targets():
    rng = np.random.default_rng(7)
    for _ in range(120):
        n = int(rng.integers(1, 7))
        scores = np.round(rng.uniform(0, 1, n), 3)
        targets = rng.integers(0, 2, n).astype(float)
        fit = pava(scores, targets)
        o_scores, o_levels = isotonic_oracle(scores, targets)
        for bp, level in zip(fit.breakpoints, fit.levels):
            oracle_here = o_levels[o_scores == bp]
            assert np.all(np.abs(oracle_here - level) <= 5e-3)


@settings(max_examples=150, deadline=None)
@given(data=st.lists(st.tuples(st.floats(0, 1),
                               st.integers(0, 1),
                               st.floats(0.1, 5)),
                     min_size=1, max_size=30))
def test_levels_monotone_and_mean_preserving(data):
    scores, targets, weights = map(np.asarray, zip(*data))
    fit = pava(scores, targets.astype(float), weights)
    assert np.all(np.diff(fit.levels) >= -1e-12)
    # weighted mean of fitted values equals weighted mean of targets
    order = np.argsort(scores, kind="stable")
    fitted = np.repeat(fit.levels,
                       [np.sum(scores == bp)
                        for bp in fit.breakpoints])
    w_sorted = weights[order]
    t_sorted = targets[order].astype(float)
    assert np.average(fitted, weights=w_sorted) == pytest.approx(
        np.average(t_sorted, weights=w_sorted), abs=1e-12)


def test_idempotence():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 25))
        scores = rng.uniform(0, 1, n)
        targets = rng.integers(0, 2, n).astype(float)
        first = pava(scores, targets)
        again = pava(first.breakpoints, first.levels)
        assert np.allclose(again.levels, first.levels, atol=1e-12)
