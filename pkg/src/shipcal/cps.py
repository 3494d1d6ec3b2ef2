"""Split and Mondrian conformal predictive systems.

Both models store calibration residuals (label minus point prediction);
at query time the residuals are shifted by the test prediction to form
the score set of an :class:`~shipcal.core.EmpiricalPredictiveCDF`.  The
Mondrian variant keeps one residual pool per bin of the predicted value,
with equal-frequency bin edges and a right-closed boundary convention
(a prediction equal to an edge falls in the higher bin).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmpiricalPredictiveCDF
from .errors import DomainError

MIN_BIN_SIZE = 20


@dataclass(frozen=True)
class ScpsModel:
    residuals: np.ndarray  # sorted

    def to_dict(self) -> dict:
        return {"kind": "scps", "residuals": self.residuals.tolist()}


@dataclass(frozen=True)
class McpsModel:
    edges: np.ndarray  # strictly increasing, length B - 1
    bins: tuple  # per-bin sorted residual arrays

    @property
    def bin_count(self) -> int:
        return len(self.bins)

    def to_dict(self) -> dict:
        return {"kind": "mcps", "edges": self.edges.tolist(),
                "bins": [b.tolist() for b in self.bins]}


def fit_scps(predictions, labels) -> ScpsModel:
    preds = np.asarray(predictions, dtype=float)
    ys = np.asarray(labels, dtype=float)
    if preds.size == 0 or preds.shape != ys.shape:
        raise DomainError("predictions and labels must align, non-empty")
    return ScpsModel(np.sort(ys - preds))


def scps_cdf(model: ScpsModel, h_x: float, tau: float) -> EmpiricalPredictiveCDF:
    return EmpiricalPredictiveCDF(h_x + model.residuals, tau)


def fit_mcps(predictions, labels, bin_count: int,
             min_bin_size: int = MIN_BIN_SIZE) -> McpsModel:
    preds = np.asarray(predictions, dtype=float)
    ys = np.asarray(labels, dtype=float)
    if preds.size == 0 or preds.shape != ys.shape:
        raise DomainError("predictions and labels must align, non-empty")
    if bin_count < 1:
        raise DomainError("bin count must be >= 1")

    residuals = ys - preds
    b = min(bin_count, max(1, preds.size // min_bin_size))
    while b >= 1:
        edges = np.unique(np.quantile(preds, np.arange(1, b) / b)) if b > 1 \
            else np.empty(0)
        assign = np.searchsorted(edges, preds, side="right")
        counts = np.bincount(assign, minlength=edges.size + 1)
        if b == 1 or counts.min() >= min_bin_size:
            bins = tuple(np.sort(residuals[assign == k])
                         for k in range(edges.size + 1))
            return McpsModel(edges, bins)
        b -= 1
    raise DomainError("could not construct any feasible bin")  # pragma: no cover


def _bin_of(model: McpsModel, h_x: float) -> int:
    return int(np.searchsorted(model.edges, h_x, side="right"))


def mcps_cdf(model: McpsModel, h_x: float, tau: float) -> EmpiricalPredictiveCDF:
    residuals = model.bins[_bin_of(model, h_x)]
    return EmpiricalPredictiveCDF(h_x + residuals, tau)


def model_from_dict(doc: dict):
    if doc["kind"] == "scps":
        return ScpsModel(np.asarray(doc["residuals"], dtype=float))
    if doc["kind"] == "mcps":
        return McpsModel(np.asarray(doc["edges"], dtype=float),
                         tuple(np.asarray(b, dtype=float) for b in doc["bins"]))
    raise DomainError(f"unknown cps model kind {doc['kind']!r}")
