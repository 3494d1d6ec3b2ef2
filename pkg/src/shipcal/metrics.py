"""Distributional and point evaluation.

Conventions pinned here:

* CRPS treats every forecast as supported on its score range: the CDF is
  taken as 0 below the smallest support point and 1 above the largest,
  consistent with quantile clamping.
* MQCE counts strict under-shoots {y < q-prediction}; with integer labels
  ties at the quantile matter, which the report output documents.
* Late metrics are reported as absent (None) when no truly-late rows
  exist, never as 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum

import numpy as np

from .errors import DomainError

PL_LEVELS = np.round(np.arange(1, 10) * 0.1, 10)
INTERVAL_LEVELS = (0.80, 0.90, 0.95)


def crps(dist, y: float) -> float:
    """Closed-form integral of (F(u) - 1{u >= y})^2 over constant segments."""
    pts = np.unique(np.append(dist.support_points(), float(y)))
    if pts.size == 1:
        return 0.0
    mids = (pts[:-1] + pts[1:]) / 2.0
    lo, hi = dist.support_bounds
    cdf = dist.cdf_many(mids)
    cdf = np.where(mids < lo, 0.0, np.where(mids > hi, 1.0, cdf))
    indicator = (mids >= y).astype(float)
    widths = np.diff(pts)
    return float(fsum(widths * (cdf - indicator) ** 2))


def quantile_matrix(dists) -> np.ndarray:
    """Per-instance quantile predictions at the nine levels 0.1 ... 0.9."""
    dists = list(dists)
    if not dists:
        raise DomainError("need at least one distribution")
    out = np.empty((len(dists), PL_LEVELS.size))
    for i, dist in enumerate(dists):
        out[i] = dist.quantile_many(PL_LEVELS)
    return out


def pinball_and_mqce(quantile_preds: np.ndarray, labels) -> tuple[float, float]:
    """Average pinball loss and mean quantile coverage error.

    ``quantile_preds`` has one row per instance and one column per level in
    0.1 ... 0.9.
    """
    y = np.asarray(labels, dtype=float)
    preds = np.asarray(quantile_preds, dtype=float)
    if preds.ndim != 2 or preds.shape != (y.size, PL_LEVELS.size):
        raise DomainError("expected one prediction per instance and level")
    q = PL_LEVELS[np.newaxis, :]
    diff = y[:, np.newaxis] - preds
    pl = float(np.mean(q * np.maximum(diff, 0.0)
                       + (1.0 - q) * np.maximum(-diff, 0.0)))
    coverage = np.mean(y[:, np.newaxis] < preds, axis=0)
    mqce = float(np.mean(np.abs(coverage - PL_LEVELS)))
    return pl, mqce


def point_metrics(preds, labels) -> dict:
    p = np.asarray(preds, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.size == 0 or p.shape != y.shape:
        raise DomainError("predictions and labels must align, non-empty")
    err = p - y
    out = {
        "accuracy": float(np.mean(p == y)),
        "rmse": float(np.sqrt(np.mean(err ** 2))),
        "mae": float(np.mean(np.abs(err))),
    }
    late = y > 0
    if late.any():
        out["late_detection_rate"] = float(np.mean(p[late] > 0))
        out["late_rmse"] = float(np.sqrt(np.mean(err[late] ** 2)))
        out["late_mae"] = float(np.mean(np.abs(err[late])))
    else:
        out["late_detection_rate"] = None
        out["late_rmse"] = None
        out["late_mae"] = None
    return out


def interval_metrics(dists, labels, levels=INTERVAL_LEVELS) -> dict:
    dists = list(dists)
    y = np.asarray(labels, dtype=float)
    if not dists or y.size != len(dists):
        raise DomainError("distributions and labels must align, non-empty")
    out = {}
    for level in levels:
        bounds = np.array([d.central_interval(level) for d in dists])
        covered = (y >= bounds[:, 0]) & (y <= bounds[:, 1])
        out[level] = {"coverage": float(np.mean(covered)),
                      "mean_size": float(np.mean(bounds[:, 1] - bounds[:, 0]))}
    return out


@dataclass(frozen=True)
class EvaluationReport:
    crps: float
    pl: float
    mqce: float
    intervals: dict  # level -> {"coverage", "mean_size"}
    accuracy: float
    rmse: float
    mae: float
    late_detection_rate: float | None
    late_rmse: float | None
    late_mae: float | None

    def to_dict(self) -> dict:
        return {
            "crps": self.crps,
            "pl": self.pl,
            "mqce": self.mqce,
            "mqce_tie_convention":
                "strict inequality y < quantile prediction; an integer label "
                "tying a quantile does not count as covered",
            "intervals": {f"{int(round(level * 100))}": stats
                          for level, stats in self.intervals.items()},
            "accuracy": self.accuracy,
            "rmse": self.rmse,
            "mae": self.mae,
            "late_detection_rate": self.late_detection_rate,
            "late_rmse": self.late_rmse,
            "late_mae": self.late_mae,
        }


def evaluate(dists, labels, point_preds, levels=INTERVAL_LEVELS) -> EvaluationReport:
    """Full report: distributional metrics plus point metrics."""
    dists = list(dists)
    y = np.asarray(labels, dtype=float)
    if not dists or y.size != len(dists):
        raise DomainError("distributions and labels must align, non-empty")
    crps_mean = float(fsum(crps(d, yi) for d, yi in zip(dists, y)) / y.size)
    pl, mqce = pinball_and_mqce(quantile_matrix(dists), y)
    pm = point_metrics(point_preds, y)
    return EvaluationReport(
        crps=crps_mean, pl=pl, mqce=mqce,
        intervals=interval_metrics(dists, y, levels),
        **pm)
