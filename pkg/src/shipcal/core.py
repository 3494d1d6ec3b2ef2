"""Predictive distributions over integer-day delivery deviations.

Three distribution kinds are supported:

* :class:`EmpiricalPredictiveCDF` -- a tau-smoothed empirical CDF over a
  sorted set of calibration scores (the conformal predictive system output),
* :class:`DiscreteDistribution` -- a finite categorical distribution (the
  calibrated classifier output, also used for point masses),
* :class:`MixtureDistribution` -- a convex combination of the above.

All objects are immutable after construction and every query is pure, so
they can be shared freely across workers.  Every distribution answers the
same three queries: ``cdf``, ``quantile`` and ``central_interval``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DomainError

# Scores closer than this are treated as exact ties in the CDF formula.
TIE_TOL = 1e-12

SERIAL_VERSION = 1


def _as_sorted_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if np.any(np.diff(arr) < 0):
        raise DomainError(f"{name} must be sorted non-decreasing")
    return arr


def _quantile_from_candidates(candidates: np.ndarray,
                              at_values: np.ndarray,
                              right_values: np.ndarray,
                              qs: np.ndarray) -> np.ndarray:
    """Infimum-based quantiles of a monotone step CDF.

    ``at_values`` / ``right_values`` are the CDF evaluated at each candidate
    point and its right-hand limit.  The infimum of ``{y: F(y) >= q}`` is
    either the first candidate whose at-point value reaches q, or the left
    endpoint of the first constant segment whose value reaches q, whichever
    comes earlier.  Out-of-range quantiles clamp to the extreme candidates.
    """
    i_at = np.searchsorted(at_values, qs, side="left")
    i_right = np.searchsorted(right_values, qs, side="left")
    idx = np.minimum(np.minimum(i_at, i_right), candidates.size - 1)
    return candidates[idx]


@dataclass(frozen=True)
class ProbabilityInterval:
    """Lower/upper calibrated probability pair from dual isotonic fits."""

    p0: float
    p1: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= self.p1 <= 1.0):
            raise DomainError(
                f"invalid probability interval ({self.p0}, {self.p1})")


@dataclass(frozen=True)
class EmpiricalPredictiveCDF:
    """Tau-smoothed empirical predictive CDF over sorted calibration scores.

    For a query y strictly between two consecutive scores the CDF value is
    ``(n + tau) / (N + 1)`` where n counts scores below y; at a score the
    tie-aware at-point formula applies.  ``lower_closed`` / ``upper_closed``
    clamp the corresponding tail to 0 / 1, which is how truncated
    class-conditional components keep their support class-consistent.
    Quantile queries always clamp to the extreme scores.
    """

    scores: np.ndarray
    tau: float = 0.5
    lower_closed: bool = False
    upper_closed: bool = False

    def __post_init__(self):
        arr = _as_sorted_array(self.scores, "scores")
        object.__setattr__(self, "scores", arr)
        if not (0.0 <= self.tau <= 1.0):
            raise DomainError(f"tau must be in [0, 1], got {self.tau}")

    @property
    def support_bounds(self) -> tuple[float, float]:
        return float(self.scores[0]), float(self.scores[-1])

    def support_points(self) -> np.ndarray:
        return np.unique(self.scores)

    def cdf_many(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        s = self.scores
        n1 = s.size + 1
        lo = np.searchsorted(s, ys - TIE_TOL, side="left")
        hi = np.searchsorted(s, ys + TIE_TOL, side="right")
        interior = (lo + self.tau) / n1
        # at a tied score: n' = lo + 1, n'' = hi
        at_point = (lo + (hi - lo + 1) * self.tau) / n1
        out = np.where(hi > lo, at_point, interior)
        if self.lower_closed:
            out = np.where(ys < s[0] - TIE_TOL, 0.0, out)
        if self.upper_closed:
            out = np.where(ys > s[-1] + TIE_TOL, 1.0, out)
        return out

    def cdf_right_many(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        s = self.scores
        hi = np.searchsorted(s, ys + TIE_TOL, side="right")
        out = (hi + self.tau) / (s.size + 1)
        if self.lower_closed:
            out = np.where(ys < s[0] - TIE_TOL, 0.0, out)
        if self.upper_closed:
            out = np.where(ys >= s[-1] - TIE_TOL, 1.0, out)
        return out

    def cdf(self, y: float) -> float:
        return float(self.cdf_many(np.array([y]))[0])

    def quantile_many(self, qs) -> np.ndarray:
        qs = np.asarray(qs, dtype=float)
        if np.any(qs < 0.0) or np.any(qs > 1.0):
            raise DomainError("quantile levels must lie in [0, 1]")
        cands = self.support_points()
        return _quantile_from_candidates(
            cands, self.cdf_many(cands), self.cdf_right_many(cands), qs)

    def quantile(self, q: float) -> float:
        return float(self.quantile_many(np.array([q]))[0])

    def central_interval(self, confidence: float) -> tuple[float, float]:
        return central_interval(self, confidence)

    def to_dict(self) -> dict:
        d = {"kind": "cps", "version": SERIAL_VERSION,
             "scores": self.scores.tolist(), "tau": self.tau}
        if self.lower_closed:
            d["lower_closed"] = True
        if self.upper_closed:
            d["upper_closed"] = True
        return d


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite categorical distribution over sorted distinct support values."""

    support: np.ndarray
    probs: np.ndarray
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sup = _as_sorted_array(self.support, "support")
        if np.any(np.diff(sup) <= 0):
            raise DomainError("support values must be strictly increasing")
        p = np.asarray(self.probs, dtype=float)
        if p.shape != sup.shape:
            raise DomainError("support and probs must have equal length")
        if np.any(p < 0):
            raise DomainError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {p.sum()}, expected 1")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "_cum", np.cumsum(p))

    @classmethod
    def point_mass(cls, value: float) -> "DiscreteDistribution":
        return cls(np.array([float(value)]), np.array([1.0]))

    @property
    def support_bounds(self) -> tuple[float, float]:
        return float(self.support[0]), float(self.support[-1])

    def support_points(self) -> np.ndarray:
        return self.support

    def cdf_many(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        idx = np.searchsorted(self.support, ys + TIE_TOL, side="right")
        return np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)

    # Discrete CDFs are right-continuous.
    cdf_right_many = cdf_many

    def cdf(self, y: float) -> float:
        return float(self.cdf_many(np.array([y]))[0])

    def quantile_many(self, qs) -> np.ndarray:
        qs = np.asarray(qs, dtype=float)
        if np.any(qs < 0.0) or np.any(qs > 1.0):
            raise DomainError("quantile levels must lie in [0, 1]")
        vals = self._cum
        return _quantile_from_candidates(self.support, vals, vals, qs)

    def quantile(self, q: float) -> float:
        return float(self.quantile_many(np.array([q]))[0])

    def central_interval(self, confidence: float) -> tuple[float, float]:
        return central_interval(self, confidence)

    def to_dict(self) -> dict:
        return {"kind": "discrete", "version": SERIAL_VERSION,
                "support": self.support.tolist(),
                "probs": self.probs.tolist()}


@dataclass(frozen=True)
class MixtureDistribution:
    """Convex combination of component distributions."""

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        comps = tuple(self.components)
        if w.ndim != 1 or w.size == 0 or w.size != len(comps):
            raise DomainError("weights and components must align, non-empty")
        if np.any(w < 0):
            raise DomainError("mixture weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise DomainError(f"mixture weights sum to {w.sum()}, expected 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def support_bounds(self) -> tuple[float, float]:
        los, his = zip(*(c.support_bounds for c in self.components))
        return min(los), max(his)

    def support_points(self) -> np.ndarray:
        return np.unique(np.concatenate(
            [c.support_points() for c in self.components]))

    def cdf_many(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        out = np.zeros_like(ys)
        for w, comp in zip(self.weights, self.components):
            if w > 0:
                out += w * comp.cdf_many(ys)
        return out

    def cdf_right_many(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        out = np.zeros_like(ys)
        for w, comp in zip(self.weights, self.components):
            if w > 0:
                out += w * comp.cdf_right_many(ys)
        return out

    def cdf(self, y: float) -> float:
        return float(self.cdf_many(np.array([y]))[0])

    def quantile_many(self, qs) -> np.ndarray:
        qs = np.asarray(qs, dtype=float)
        if np.any(qs < 0.0) or np.any(qs > 1.0):
            raise DomainError("quantile levels must lie in [0, 1]")
        cands = self.support_points()
        return _quantile_from_candidates(
            cands, self.cdf_many(cands), self.cdf_right_many(cands), qs)

    def quantile(self, q: float) -> float:
        return float(self.quantile_many(np.array([q]))[0])

    def central_interval(self, confidence: float) -> tuple[float, float]:
        return central_interval(self, confidence)

    def to_dict(self) -> dict:
        return {"kind": "mixture", "version": SERIAL_VERSION,
                "components": [{"weight": float(w), "dist": c.to_dict()}
                               for w, c in zip(self.weights, self.components)]}


Distribution = EmpiricalPredictiveCDF | DiscreteDistribution | MixtureDistribution


def cdf_eval(dist: Distribution, y: float) -> float:
    """F(y) for any distribution kind."""
    return dist.cdf(y)


def quantile(dist: Distribution, q: float) -> float:
    """inf{y : F(y) >= q}, clamped to the distribution's support range."""
    return dist.quantile(q)


def central_interval(dist: Distribution, confidence: float) -> tuple[float, float]:
    """Equal-tailed interval at the given confidence level."""
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must be in (0, 1), got {confidence}")
    lo = dist.quantile((1.0 - confidence) / 2.0)
    hi = dist.quantile((1.0 + confidence) / 2.0)
    return lo, hi


def dist_from_dict(doc: dict) -> Distribution:
    """Inverse of ``to_dict`` for all three distribution kinds."""
    try:
        kind = doc["kind"]
        if kind == "cps":
            return EmpiricalPredictiveCDF(
                np.asarray(doc["scores"], dtype=float),
                float(doc["tau"]),
                bool(doc.get("lower_closed", False)),
                bool(doc.get("upper_closed", False)))
        if kind == "discrete":
            return DiscreteDistribution(
                np.asarray(doc["support"], dtype=float),
                np.asarray(doc["probs"], dtype=float))
        if kind == "mixture":
            comps = [dist_from_dict(c["dist"]) for c in doc["components"]]
            weights = np.array([c["weight"] for c in doc["components"]],
                               dtype=float)
            return MixtureDistribution(weights, tuple(comps))
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"malformed distribution document: {exc}") from exc
    raise DataFormatError(f"unknown distribution kind {kind!r}")


def _format_json(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise DataFormatError("cannot serialize non-finite real")
        return format(obj, ".17g")
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_format_json(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(
            json.dumps(str(k)) + ":" + _format_json(v)
            for k, v in obj.items()) + "}"
    raise DataFormatError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """Deterministic JSON text: insertion field order, 17-sig-digit reals."""
    return _format_json(obj)
