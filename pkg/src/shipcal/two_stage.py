"""Classify-then-regress with truncated conformal prediction.

A three-class status model (early / on-time / late) is combined with a
single conformal regressor fitted on the full calibration set.  Class
constraints are enforced only at prediction time by truncating the score
set of the regressor, so all three class-conditional components share one
residual multiset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (DiscreteDistribution, EmpiricalPredictiveCDF,
                   MixtureDistribution)
from .cps import McpsModel, ScpsModel, mcps_cdf, scps_cdf
from .errors import DomainError
from .learners import LinearScorer
from .venn_abers import MulticlassCvap

STATUSES = (-1, 0, 1)


def status_of(label: int) -> int:
    """Delivery status: -1 early, 0 on-time, 1 late."""
    return int(np.sign(label))


def truncate_scores(scores, status: int, tau: float):
    """Class-conditional distribution from the sorted test-time score set.

    On-time collapses to the unit atom at 0.  Early keeps only strictly
    negative scores, late only strictly positive ones; the retained subset
    is renormalized by reusing the smoothed-CDF formula with the reduced
    count and closing both tails, so the component's support stays on the
    correct side of zero.  An empty subset falls back to the nearest
    class-consistent integer day.
    """
    if status not in STATUSES:
        raise DomainError(f"status must be one of {STATUSES}, got {status}")
    if status == 0:
        return DiscreteDistribution.point_mass(0.0)
    s = np.asarray(scores, dtype=float)
    subset = s[s < 0.0] if status == -1 else s[s > 0.0]
    if subset.size == 0:
        return DiscreteDistribution.point_mass(float(status))
    return EmpiricalPredictiveCDF(subset, tau,
                                  lower_closed=True, upper_closed=True)


@dataclass(frozen=True)
class TwoStageModel:
    status_classifier: MulticlassCvap  # classes exactly (-1, 0, 1)
    scorer: LinearScorer
    regressor: ScpsModel | McpsModel

    def __post_init__(self):
        if tuple(self.status_classifier.classes.tolist()) != STATUSES:
            raise DomainError("status classifier must cover classes -1, 0, 1")


def mixture_predict(model: TwoStageModel, features, tau: float) -> MixtureDistribution:
    """Blend the class-conditional components with calibrated status weights.

    A single tau is shared by all components of one prediction.
    """
    x = np.asarray(features, dtype=float).reshape(1, -1)
    return mixture_predict_many(model, x, [tau])[0]


def mixture_predict_many(model: TwoStageModel, features, taus) -> list:
    """One mixture distribution per feature row; taus aligns with rows."""
    x = np.asarray(features, dtype=float)
    tau_arr = np.broadcast_to(np.asarray(taus, dtype=float), (x.shape[0],))
    weights = model.status_classifier.predict_many(x)
    h = model.scorer.predict(x)
    mixtures = []
    for w_row, h_i, tau in zip(weights, h, tau_arr):
        if isinstance(model.regressor, McpsModel):
            scores = mcps_cdf(model.regressor, float(h_i), float(tau)).scores
        else:
            scores = scps_cdf(model.regressor, float(h_i), float(tau)).scores
        components = tuple(truncate_scores(scores, s, float(tau))
                           for s in STATUSES)
        mixtures.append(MixtureDistribution(w_row, components))
    return mixtures
