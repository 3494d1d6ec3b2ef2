"""Datasets: synthetic generation, time-series folds, imputation, CSV I/O.

Labels are signed integer day deviations; after ingestion clipping they
always lie in [-10, 10].  Rows carry a non-decreasing chronological index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .decision import DAY_MAX, DAY_MIN, round_half_away
from .errors import DataFormatError, DomainError


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray  # (n, d) float
    labels: np.ndarray  # (n,) int, in [-10, 10]
    chron: np.ndarray  # (n,) non-decreasing int ordinals

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=int)
        t = np.asarray(self.chron, dtype=int)
        if x.ndim != 2 or x.shape[0] == 0:
            raise DomainError("features must be a non-empty (n, d) matrix")
        if y.shape != (x.shape[0],) or t.shape != (x.shape[0],):
            raise DomainError("labels and chron index must align with features")
        if np.any(np.diff(t) < 0):
            raise DomainError("chronological index must be non-decreasing")
        if y.min() < DAY_MIN or y.max() > DAY_MAX:
            raise DomainError(f"labels must lie in [{DAY_MIN}, {DAY_MAX}]")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "chron", t)

    def __len__(self) -> int:
        return self.features.shape[0]

    def slice(self, start: int, stop: int) -> "LabeledDataset":
        return LabeledDataset(self.features[start:stop],
                              self.labels[start:stop],
                              self.chron[start:stop])


@dataclass(frozen=True)
class SyntheticConfig:
    n_rows: int
    n_features: int = 5
    on_time_mass: float = 0.35
    tail_skew: float = 0.3
    noise_scale: float = 1.0
    hetero: float = 0.0  # residual spread grows with |latent| when > 0
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1 or self.n_features < 1:
            raise DomainError("n_rows and n_features must be >= 1")
        if not (0.0 < self.on_time_mass < 1.0 or self.on_time_mass == 1.0):
            raise DomainError("on_time_mass must lie in (0, 1]")
        if self.noise_scale < 0 or self.hetero < 0:
            raise DomainError("scales must be non-negative")


def generate_synthetic(config: SyntheticConfig) -> LabeledDataset:
    """Seeded i.i.d. rows (hence exchangeable within any contiguous block).

    Each row draws standard-normal features; a fixed linear combination
    forms the latent deviation.  With probability ``on_time_mass`` the
    label is forced to 0; otherwise it is the latent value plus skewed
    noise, rounded and clipped to [-10, 10].  The noise scale grows with
    |latent| when ``hetero`` > 0.
    """
    rng = np.random.default_rng(config.seed)
    d = config.n_features
    w = rng.normal(size=d)
    w *= 2.0 / np.linalg.norm(w)
    x = rng.normal(size=(config.n_rows, d))
    latent = x @ w
    z = rng.normal(size=config.n_rows)
    z_skew = rng.normal(size=config.n_rows)
    scale = config.noise_scale * (1.0 + config.hetero * np.abs(latent))
    raw = latent + scale * (z + config.tail_skew * np.abs(z_skew))
    labels = np.clip(round_half_away(raw), DAY_MIN, DAY_MAX).astype(int)
    labels[rng.uniform(size=config.n_rows) < config.on_time_mass] = 0
    return LabeledDataset(x, labels, np.arange(config.n_rows))


@dataclass(frozen=True)
class FoldSpec:
    train: tuple[int, int]
    calibration: tuple[int, int]
    validation: tuple[int, int]


@dataclass(frozen=True)
class FoldPlan:
    n_rows: int
    folds: tuple = field(default=())


def timeseries_folds(n_rows: int, k: int) -> FoldPlan:
    """Expanding-window plan over k + 2 equal contiguous blocks.

    Fold i (1-based) trains on blocks 1..i, calibrates on block i+1 and
    validates on block i+2; any remainder rows join the final block, which
    is never used for training.
    """
    if k < 1:
        raise DomainError("fold count must be >= 1")
    block = n_rows // (k + 2)
    if block < 1:
        raise DomainError(f"{n_rows} rows cannot fill {k + 2} blocks")
    bounds = [i * block for i in range(k + 2)] + [n_rows]
    folds = tuple(
        FoldSpec(train=(0, bounds[i]),
                 calibration=(bounds[i], bounds[i + 1]),
                 validation=(bounds[i + 1], bounds[i + 2]))
        for i in range(1, k + 1))
    return FoldPlan(n_rows, folds)


@dataclass(frozen=True)
class HierarchicalTable:
    """Geographic fallback map: 5-char key, then 3- and 2-char prefixes."""

    key5: dict
    key3: dict
    key2: dict
    global_default: float


def hierarchical_lookup(table: HierarchicalTable, key5: str) -> float:
    if not isinstance(key5, str) or len(key5) != 5:
        raise DataFormatError(f"expected a 5-character key, got {key5!r}")
    if key5 in table.key5:
        return table.key5[key5]
    if key5[:3] in table.key3:
        return table.key3[key5[:3]]
    if key5[:2] in table.key2:
        return table.key2[key5[:2]]
    return table.global_default


def write_dataset(dataset: LabeledDataset, path) -> None:
    d = dataset.features.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"f{i + 1}" for i in range(d)] + ["y"])
        for t, row, y in zip(dataset.chron, dataset.features, dataset.labels):
            writer.writerow([int(t)] + [format(v, ".17g") for v in row]
                            + [int(y)])


def read_dataset(path, clip: bool = False) -> LabeledDataset:
    """Parse the ``t,f1..fD,y`` CSV schema.

    Labels outside [-10, 10] are rejected unless ``clip`` is set, in which
    case they clamp to the range boundary.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        if (len(header) < 3 or header[0] != "t" or header[-1] != "y"
                or header[1:-1] != [f"f{i + 1}" for i in range(len(header) - 2)]):
            raise DataFormatError(f"{path}: bad header {header!r}")
        d = len(header) - 2
        chron, rows, labels = [], [], []
        for idx, rec in enumerate(reader, start=2):
            if len(rec) != d + 2:
                raise DataFormatError(
                    f"{path}: row {idx}: expected {d + 2} fields, got {len(rec)}")
            try:
                t = int(rec[0])
                feats = [float(v) for v in rec[1:-1]]
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {idx}: non-numeric entry") from None
            try:
                y = int(rec[-1])
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {idx}: label must be an integer") from None
            if not (DAY_MIN <= y <= DAY_MAX):
                if not clip:
                    raise DataFormatError(
                        f"{path}: row {idx}: label {y} outside "
                        f"[{DAY_MIN}, {DAY_MAX}] (pass clip to clamp)")
                y = max(DAY_MIN, min(DAY_MAX, y))
            chron.append(t)
            rows.append(feats)
            labels.append(y)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    if any(b < a for a, b in zip(chron, chron[1:])):
        bad = next(i for i, (a, b) in enumerate(zip(chron, chron[1:]), start=3)
                   if b < a)
        raise DataFormatError(f"{path}: row {bad}: chronological index decreases")
    return LabeledDataset(np.asarray(rows), np.asarray(labels),
                          np.asarray(chron))
