"""Weighted isotonic regression via pool-adjacent-violators.

This is the staircase fit underlying both the isotonic-regression
calibration baseline and the dual fits of the Venn-Abers predictors.
Points sharing a score are pre-pooled (weighted mean, summed weight) so
that evaluating the fitted staircase at any score is single-valued.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class IsotonicFit:
    """Non-decreasing step function: level j applies on [breakpoints[j], next)."""

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        lv = np.asarray(self.levels, dtype=float)
        if bp.size == 0 or bp.shape != lv.shape:
            raise DomainError("breakpoints and levels must align, non-empty")
        if np.any(np.diff(bp) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(np.diff(lv) < -1e-12):
            raise DomainError("levels must be non-decreasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)


def pava(scores, targets, weights=None) -> IsotonicFit:
    """Weighted least-squares isotonic fit of targets against scores.

    Returns the unique non-decreasing step function minimizing
    sum w_i * (f(score_i) - target_i)^2.  Equal scores are pooled before
    solving; each fitted level is the weighted mean of its pooled block.
    """
    s = np.asarray(scores, dtype=float)
    t = np.asarray(targets, dtype=float)
    if s.size == 0 or s.shape != t.shape:
        raise DomainError("scores and targets must align, non-empty")
    if weights is None:
        w = np.ones_like(s)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != s.shape:
            raise DomainError("weights must align with scores")
        if np.any(w <= 0):
            raise DomainError("weights must be positive")

    order = np.argsort(s, kind="stable")
    s, t, w = s[order], t[order], w[order]

    # pre-pool equal scores
    uniq, inverse = np.unique(s, return_inverse=True)
    if uniq.size != s.size:
        wp = np.bincount(inverse, weights=w)
        tp = np.bincount(inverse, weights=w * t) / wp
        s, t, w = uniq, tp, wp

    # PAVA: merge adjacent blocks while a decrease remains
    means: list[float] = []
    wsums: list[float] = []
    counts: list[int] = []
    for ti, wi in zip(t, w):
        means.append(float(ti))
        wsums.append(float(wi))
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m, ws, c = means.pop(), wsums.pop(), counts.pop()
            tot = wsums[-1] + ws
            means[-1] = (means[-1] * wsums[-1] + m * ws) / tot
            wsums[-1] = tot
            counts[-1] += c

    levels = np.repeat(means, counts)
    return IsotonicFit(s, levels)


def step_eval(fit: IsotonicFit, s: float) -> float:
    """Level of the largest breakpoint <= s; clamps below the first one."""
    idx = int(np.searchsorted(fit.breakpoints, s, side="right")) - 1
    return float(fit.levels[max(idx, 0)])


def step_eval_many(fit: IsotonicFit, ss) -> np.ndarray:
    idx = np.searchsorted(fit.breakpoints, np.asarray(ss, dtype=float),
                          side="right") - 1
    return fit.levels[np.maximum(idx, 0)]
