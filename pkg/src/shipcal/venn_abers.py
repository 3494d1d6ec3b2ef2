"""Venn-Abers calibration: IVAP intervals, CVAP aggregation, multiclass.

The inductive predictor (IVAP) refits two isotonic regressions per query,
once with the test point labeled 0 and once labeled 1; the bracketed pair
is the probability interval.  The cross-validated variant (CVAP) collects
one interval per fold and merges them with the geometric-mean rule

    p = GM(p1) / (GM(1 - p0) + GM(p1)).

Fold calibration sets are contiguous chronological blocks, matching the
time-series fold plan used everywhere else in the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution, ProbabilityInterval
from .errors import DomainError
from .isotonic import IsotonicFit, pava, step_eval
from .learners import LinearScorer, constant_scorer, fit_logistic_scorer

CLIP_EPS = 1e-6


def ivap_interval(cal_scores, cal_labels, s_test: float) -> ProbabilityInterval:
    """Dual-isotonic probability interval for one test score."""
    s = np.asarray(cal_scores, dtype=float)
    y = np.asarray(cal_labels, dtype=float)
    if s.size == 0 or s.shape != y.shape:
        raise DomainError("calibration scores and labels must align, non-empty")
    if not np.all((y == 0) | (y == 1)):
        raise DomainError("calibration labels must be binary")
    s_aug = np.append(s, s_test)
    p0 = step_eval(pava(s_aug, np.append(y, 0.0)), s_test)
    p1 = step_eval(pava(s_aug, np.append(y, 1.0)), s_test)
    if p0 > p1:  # numerically possible only at rounding noise
        p0, p1 = p1, p0
    return ProbabilityInterval(p0, p1)


def ivap_intervals(cal_scores, cal_labels, test_scores):
    """Vectorized dual-isotonic intervals for many test scores.

    The fitted value at the inserted test point depends only on where the
    score lands among the distinct calibration scores, never on its exact
    value, so p0 and p1 are piecewise constant: one value per open
    interval between calibration scores and one per exact tie.  Each slot
    value comes from the max-min representation of isotonic regression,

        f(slot) = max_{a <= slot} min_{b >= slot} mean(block a..b),

    with the hypothetical (label, weight 1) point included in the block.
    Agrees with ``ivap_interval`` and runs in O(k^2) time, O(k) memory
    for k distinct calibration scores, plus a binary search per query.
    Returns ``(p0, p1)`` arrays aligned with ``test_scores``.
    """
    s = np.asarray(cal_scores, dtype=float)
    y = np.asarray(cal_labels, dtype=float)
    t = np.asarray(test_scores, dtype=float)
    if s.size == 0 or s.shape != y.shape:
        raise DomainError("calibration scores and labels must align, non-empty")
    if not np.all((y == 0) | (y == 1)):
        raise DomainError("calibration labels must be binary")
    uniq, inverse = np.unique(s, return_inverse=True)
    k = uniq.size
    weight = np.concatenate([[0.0], np.cumsum(np.bincount(inverse))])
    ones = np.concatenate([[0.0], np.cumsum(np.bincount(inverse, weights=y))])

    f0_int = np.empty(k + 1)
    f1_int = np.empty(k + 1)
    f0_tie = np.empty(k)
    f1_tie = np.empty(k)
    run0 = np.full(k + 1, -np.inf)
    run1 = np.full(k + 1, -np.inf)
    for a in range(k + 1):
        if a >= 1:
            # max over block starts strictly left of a pooled tie group
            f0_tie[a - 1] = run0[a]
            f1_tie[a - 1] = run1[a]
        den = weight - weight[a] + 1.0  # block weight, inserted point included
        num = ones - ones[a]
        with np.errstate(divide="ignore", invalid="ignore"):
            row0 = num / den
            row1 = (num + 1.0) / den
        # suffix minima over block ends b >= column index
        row0 = np.minimum.accumulate(row0[::-1])[::-1]
        row1 = np.minimum.accumulate(row1[::-1])[::-1]
        np.maximum(run0, row0, out=run0)
        np.maximum(run1, row1, out=run1)
        f0_int[a] = run0[a]
        f1_int[a] = run1[a]

    pos = np.searchsorted(uniq, t, side="left")
    safe = np.minimum(pos, k - 1)
    tie = (pos < k) & (uniq[safe] == t)
    p0 = np.where(tie, f0_tie[safe], f0_int[pos])
    p1 = np.where(tie, f1_tie[safe], f1_int[pos])
    return np.minimum(p0, p1), np.maximum(p0, p1)


def cvap_aggregate(intervals) -> float:
    """Merge per-fold intervals into one probability (geometric-mean rule)."""
    if not intervals:
        raise DomainError("need at least one interval to aggregate")
    p0 = np.clip([iv.p0 for iv in intervals], CLIP_EPS, 1.0 - CLIP_EPS)
    p1 = np.clip([iv.p1 for iv in intervals], CLIP_EPS, 1.0 - CLIP_EPS)
    return _gm(p1) / (_gm(1.0 - p0) + _gm(p1))


def _gm(values: np.ndarray) -> float:
    # identical inputs short-circuit so degenerate folds reproduce exactly
    if np.all(values == values[0]):
        return float(values[0])
    return float(np.exp(np.mean(np.log(values))))


def _gm_rows(matrix: np.ndarray) -> np.ndarray:
    """Geometric mean down the fold axis, matching ``_gm`` per column."""
    out = np.exp(np.mean(np.log(matrix), axis=0))
    same = np.all(matrix == matrix[0], axis=0)
    out[same] = matrix[0, same]
    return out


@dataclass(frozen=True)
class CvapFold:
    scorer: LinearScorer
    cal_scores: np.ndarray
    cal_labels: np.ndarray

    def to_dict(self) -> dict:
        return {"scorer": self.scorer.to_dict(),
                "cal_scores": self.cal_scores.tolist(),
                "cal_labels": self.cal_labels.astype(int).tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "CvapFold":
        return cls(LinearScorer.from_dict(doc["scorer"]),
                   np.asarray(doc["cal_scores"], dtype=float),
                   np.asarray(doc["cal_labels"], dtype=float))


@dataclass(frozen=True)
class CvapModel:
    """One-vs-rest binary calibrator: per-fold scorer plus calibration pairs."""

    folds: tuple

    def predict_probability(self, features) -> float:
        x = np.asarray(features, dtype=float).reshape(1, -1)
        return float(self.predict_probability_many(x)[0])

    def predict_probability_many(self, features) -> np.ndarray:
        """Aggregated probabilities for a feature matrix, one per row."""
        x = np.asarray(features, dtype=float)
        p0 = np.empty((len(self.folds), x.shape[0]))
        p1 = np.empty_like(p0)
        for f, fold in enumerate(self.folds):
            s_test = np.clip(fold.scorer.predict(x), 0.0, 1.0)
            p0[f], p1[f] = ivap_intervals(fold.cal_scores, fold.cal_labels,
                                          s_test)
        p0 = np.clip(p0, CLIP_EPS, 1.0 - CLIP_EPS)
        p1 = np.clip(p1, CLIP_EPS, 1.0 - CLIP_EPS)
        return _gm_rows(p1) / (_gm_rows(1.0 - p0) + _gm_rows(p1))

    def to_dict(self) -> dict:
        return {"folds": [f.to_dict() for f in self.folds]}

    @classmethod
    def from_dict(cls, doc: dict) -> "CvapModel":
        return cls(tuple(CvapFold.from_dict(f) for f in doc["folds"]))


def _fit_fold(train_x, train_y, cal_x, cal_y) -> CvapFold:
    if np.unique(train_y).size < 2:
        scorer = constant_scorer(float(np.mean(train_y)))
    else:
        scorer = fit_logistic_scorer(train_x, train_y)
    cal_scores = np.clip(scorer.predict(cal_x), 0.0, 1.0)
    return CvapFold(scorer, cal_scores, np.asarray(cal_y, dtype=float))


def fit_cvap(features, binary_labels, splits) -> CvapModel:
    """Fit per-fold scorers and calibration pairs.

    ``splits`` is a list of (train_indices, cal_indices) pairs; calibration
    index sets must be disjoint across folds.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(binary_labels, dtype=float)
    if not splits:
        raise DomainError("need at least one fold split")
    seen: set[int] = set()
    folds = []
    for train_idx, cal_idx in splits:
        cal_set = set(int(i) for i in cal_idx)
        if seen & cal_set:
            raise DomainError("fold calibration sets must be disjoint")
        seen |= cal_set
        folds.append(_fit_fold(x[train_idx], y[train_idx], x[cal_idx], y[cal_idx]))
    return CvapModel(tuple(folds))


def contiguous_splits(n_rows: int, k: int) -> list:
    """k chronological blocks; fold f calibrates on block f, trains on the rest."""
    if k < 2:
        raise DomainError("cross-validated use needs k >= 2")
    if n_rows < 2 * k:
        raise DomainError(f"too few rows ({n_rows}) for {k} folds")
    bounds = np.linspace(0, n_rows, k + 1).astype(int)
    splits = []
    for f in range(k):
        cal = np.arange(bounds[f], bounds[f + 1])
        train = np.concatenate(
            [np.arange(0, bounds[f]), np.arange(bounds[f + 1], n_rows)])
        splits.append((train, cal))
    return splits


@dataclass(frozen=True)
class MulticlassCvap:
    """K one-vs-rest CVAP models over ascending class values."""

    classes: np.ndarray  # ascending integer day values
    models: tuple

    def __post_init__(self):
        if len(self.models) != self.classes.size or self.classes.size < 2:
            raise DomainError("need one CVAP model per class, K >= 2")
        if np.any(np.diff(self.classes) <= 0):
            raise DomainError("class values must be strictly ascending")

    def predict(self, features) -> DiscreteDistribution:
        raw = np.array([m.predict_probability(features) for m in self.models])
        return DiscreteDistribution(self.classes.astype(float), raw / raw.sum())

    def predict_many(self, features) -> np.ndarray:
        """Row-normalized class probabilities, shape (rows, classes)."""
        x = np.asarray(features, dtype=float)
        raw = np.column_stack([m.predict_probability_many(x)
                               for m in self.models])
        return raw / raw.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {"classes": self.classes.astype(int).tolist(),
                "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, doc: dict) -> "MulticlassCvap":
        return cls(np.asarray(doc["classes"], dtype=int),
                   tuple(CvapModel.from_dict(m) for m in doc["models"]))


def fit_multiclass_cvap(features, labels, splits) -> MulticlassCvap:
    """One-vs-rest CVAP over the distinct label values (ascending)."""
    y = np.asarray(labels)
    classes = np.unique(y)
    if classes.size < 2:
        raise DomainError("multiclass calibration needs at least 2 classes")
    models = tuple(fit_cvap(features, (y == c).astype(float), splits)
                   for c in classes)
    return MulticlassCvap(classes.astype(int), models)


@dataclass(frozen=True)
class IrCalibrator:
    """Isotonic-regression calibration baseline, one-vs-rest."""

    classes: np.ndarray
    scorers: tuple
    fits: tuple

    def predict(self, features) -> DiscreteDistribution:
        raw = []
        for scorer, fit in zip(self.scorers, self.fits):
            s = float(np.clip(scorer.predict_one(features), 0.0, 1.0))
            raw.append(max(step_eval(fit, s), CLIP_EPS))
        raw = np.asarray(raw)
        return DiscreteDistribution(self.classes.astype(float), raw / raw.sum())

    def to_dict(self) -> dict:
        return {"classes": self.classes.astype(int).tolist(),
                "scorers": [s.to_dict() for s in self.scorers],
                "fits": [{"breakpoints": f.breakpoints.tolist(),
                          "levels": f.levels.tolist()} for f in self.fits]}

    @classmethod
    def from_dict(cls, doc: dict) -> "IrCalibrator":
        fits = tuple(IsotonicFit(np.asarray(f["breakpoints"], dtype=float),
                                 np.asarray(f["levels"], dtype=float))
                     for f in doc["fits"])
        return cls(np.asarray(doc["classes"], dtype=int),
                   tuple(LinearScorer.from_dict(s) for s in doc["scorers"]),
                   fits)


def fit_ir_calibrator(train_x, train_y, cal_x, cal_y) -> IrCalibrator:
    ty = np.asarray(train_y)
    cy = np.asarray(cal_y)
    classes = np.unique(np.concatenate([ty, cy]))
    if classes.size < 2:
        raise DomainError("calibration needs at least 2 classes")
    scorers, fits = [], []
    for c in classes:
        bin_train = (ty == c).astype(float)
        if np.unique(bin_train).size < 2:
            scorer = constant_scorer(float(bin_train.mean()))
        else:
            scorer = fit_logistic_scorer(train_x, bin_train)
        cal_scores = np.clip(scorer.predict(cal_x), 0.0, 1.0)
        scorers.append(scorer)
        fits.append(pava(cal_scores, (cy == c).astype(float)))
    return IrCalibrator(classes.astype(int), tuple(scorers), tuple(fits))
