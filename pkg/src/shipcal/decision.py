"""Point-prediction extraction from distributional forecasts.

Default rules: rounded median for CDF-style forecasts, argmax for
categorical ones.  The cost-sensitive rule grid-searches a quantile level
eta in [0, 100] minimizing RMSE + beta * Late_RMSE + gamma * Early_RMSE
on a validation set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution
from .errors import DomainError

DAY_MIN, DAY_MAX = -10, 10
DEFAULT_BETA = 0.5
DEFAULT_GAMMA = 0.0
DEFAULT_GRID_STEP = 0.5


@dataclass(frozen=True)
class DecisionRuleConfig:
    beta: float = DEFAULT_BETA
    gamma: float = DEFAULT_GAMMA
    grid_step: float = DEFAULT_GRID_STEP

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise DomainError("penalty weights must be non-negative")
        if not (0 < self.grid_step <= 100):
            raise DomainError("grid_step must be in (0, 100]")
        steps = 100.0 / self.grid_step
        if abs(steps - round(steps)) > 1e-9:
            raise DomainError("grid_step must divide 100 exactly")

    def grid(self) -> np.ndarray:
        return np.arange(round(100.0 / self.grid_step) + 1) * self.grid_step


def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def point_from_quantile(dist, eta: float) -> int:
    """eta%-quantile rounded half away from zero, clamped to [-10, 10]."""
    if not (0.0 <= eta <= 100.0):
        raise DomainError(f"eta must be in [0, 100], got {eta}")
    day = round_half_away(dist.quantile(eta / 100.0))
    return int(np.clip(day, DAY_MIN, DAY_MAX))


def argmax_point(dist: DiscreteDistribution) -> int:
    """Most probable day; ties prefer the smallest |day|, then the smaller day."""
    best = None
    for v, p in zip(dist.support, dist.probs):
        key = (-p, abs(v), v)
        if best is None or key < best[0]:
            best = (key, v)
    return int(best[1])


def default_point(dist) -> int:
    """Argmax for categorical forecasts, rounded median otherwise."""
    if isinstance(dist, DiscreteDistribution):
        return argmax_point(dist)
    return point_from_quantile(dist, 50.0)


def _objective(points: np.ndarray, labels: np.ndarray,
               beta: float, gamma: float) -> float:
    err2 = (points - labels) ** 2
    total = float(np.sqrt(err2.mean()))
    late = labels > 0
    if late.any():
        total += beta * float(np.sqrt(err2[late].mean()))
    early = labels < 0
    if early.any():
        total += gamma * float(np.sqrt(err2[early].mean()))
    return total


def tune_eta(dists, labels, config: DecisionRuleConfig):
    """Grid search for the cost-sensitive quantile level.

    Returns (eta_star, objective values per grid point).  The smallest eta
    attaining the minimum wins.
    """
    labels = np.asarray(labels, dtype=float)
    dists = list(dists)
    if not dists or labels.size != len(dists):
        raise DomainError("validation distributions and labels must align")
    etas = config.grid()
    qs = etas / 100.0
    # rows: instances, cols: grid points
    points = np.empty((len(dists), etas.size))
    for i, dist in enumerate(dists):
        points[i] = np.clip(round_half_away(dist.quantile_many(qs)),
                            DAY_MIN, DAY_MAX)
    objectives = np.array([_objective(points[:, j], labels,
                                      config.beta, config.gamma)
                           for j in range(etas.size)])
    eta_star = float(etas[int(np.argmin(objectives))])
    return eta_star, objectives
