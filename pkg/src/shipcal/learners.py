"""Built-in linear scorers and the external-scores adapter.

These are deliberately simple, deterministic stand-ins so the calibration
layer runs end-to-end without external model tooling.  Any stronger
upstream model can feed the pipeline through score files instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError

RIDGE_LAMBDA = 1e-6
LOGISTIC_ITERS = 500
LOGISTIC_STEP = 0.1
LOGISTIC_L2 = 1e-4


@dataclass(frozen=True)
class LinearScorer:
    """Linear model over standardized features; zero-variance features dropped.

    ``link`` selects the output map: identity for regression scores,
    logistic for probabilities in (0, 1).
    """

    weights: np.ndarray
    intercept: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    kept: np.ndarray  # indices of retained features
    link: str = "identity"

    def predict(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        if self.kept.size:
            z = (x[:, self.kept] - self.feature_mean) / self.feature_scale
            raw = z @ self.weights + self.intercept
        else:
            raw = np.full(x.shape[0], self.intercept)
        if self.link == "logistic":
            return 1.0 / (1.0 + np.exp(-raw))
        return raw

    def predict_one(self, features) -> float:
        return float(self.predict(features)[0])

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(),
                "intercept": float(self.intercept),
                "feature_mean": self.feature_mean.tolist(),
                "feature_scale": self.feature_scale.tolist(),
                "kept": self.kept.tolist(),
                "link": self.link}

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearScorer":
        return cls(np.asarray(doc["weights"], dtype=float),
                   float(doc["intercept"]),
                   np.asarray(doc["feature_mean"], dtype=float),
                   np.asarray(doc["feature_scale"], dtype=float),
                   np.asarray(doc["kept"], dtype=int),
                   doc["link"])


def _standardize(x: np.ndarray):
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    kept = np.flatnonzero(scale > 0)
    z = (x[:, kept] - mean[kept]) / scale[kept]
    return z, mean[kept], scale[kept], kept


def fit_least_squares(features, labels) -> LinearScorer:
    """Ridge regression (lambda = 1e-6) on standardized features."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DomainError("features and labels must align")
    if x.shape[0] < 2:
        raise DomainError("least-squares fit needs at least 2 rows")
    z, mean, scale, kept = _standardize(x)
    y_mean = float(y.mean())
    if kept.size == 0:
        w = np.empty(0)
    else:
        gram = z.T @ z + RIDGE_LAMBDA * np.eye(kept.size)
        w = np.linalg.solve(gram, z.T @ (y - y_mean))
    return LinearScorer(w, y_mean, mean, scale, kept, "identity")


def fit_logistic_scorer(features, labels) -> LinearScorer:
    """Full-batch gradient descent on logistic loss, fixed schedule."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DomainError("features and labels must align")
    classes = np.unique(y)
    if not np.array_equal(classes, [0.0, 1.0]):
        raise DomainError("logistic fit requires both classes present")
    z, mean, scale, kept = _standardize(x)
    n = x.shape[0]
    w = np.zeros(kept.size)
    b = 0.0
    for _ in range(LOGISTIC_ITERS):
        p = 1.0 / (1.0 + np.exp(-(z @ w + b)))
        err = p - y
        w -= LOGISTIC_STEP * (z.T @ err / n + LOGISTIC_L2 * w)
        b -= LOGISTIC_STEP * float(err.mean())
    return LinearScorer(w, b, mean, scale, kept, "logistic")


def constant_scorer(rate: float) -> LinearScorer:
    """Fallback when one class is missing: constant probability output."""
    r = min(max(rate, 1e-6), 1.0 - 1e-6)
    b = float(np.log(r / (1.0 - r)))
    empty = np.empty(0)
    return LinearScorer(empty, b, empty, empty, np.empty(0, dtype=int),
                        "logistic")


def load_external_scores(path, expected_rows: int) -> np.ndarray:
    """Read one score per line, aligned to dataset row order."""
    lines = Path(path).read_text().splitlines()
    values = []
    for i, line in enumerate(lines):
        text = line.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError:
            raise DataFormatError(
                f"{path}: non-numeric score at row {i + 1}: {text!r}") from None
    if len(values) != expected_rows:
        raise DataFormatError(
            f"{path}: expected {expected_rows} scores, found {len(values)}")
    return np.asarray(values)
