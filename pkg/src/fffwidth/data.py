"""Process datasets, feature scaling, deterministic splitting, and error metrics.

A sample is one (F, S, h) -> W observation of a printed line. Features are
the filament feed rate F and stage speed S (mm/min); h, the nozzle-to-platen
distance, selects the dataset rather than entering the feature vector.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidSize,
    LengthMismatch,
    MissingColumn,
    NonNumericCell,
    NonPositiveValue,
    NotAGrid,
    TooFewLevels,
)

ORIGIN_SOURCE = "source"
ORIGIN_TARGET = "target"

CSV_COLUMNS = ("F_mm_per_min", "S_mm_per_min", "h_mm", "W_mm")


def derived_rng(*keys: int) -> np.random.Generator:
    """Deterministic PCG64 stream keyed by an integer tuple.

    Distinct key tuples give statistically independent streams, so parallel
    repetitions can each draw from (seed, point index, repetition index)
    without any dependence on execution order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(keys))))


@dataclass(frozen=True)
class Sample:
    """One printed-line observation."""

    f: float  # filament feed rate, mm/min
    s: float  # stage speed, mm/min
    h: float  # nozzle-to-platen distance, mm
    w: float  # printed line width, mm
    origin: str = ORIGIN_TARGET

    def __post_init__(self):
        if not (self.f > 0 and self.s > 0 and self.h > 0):
            raise NonPositiveValue(-1, "f/s/h")
        if self.w < 0:
            raise NonPositiveValue(-1, "w")
        if self.origin not in (ORIGIN_SOURCE, ORIGIN_TARGET):
            raise ValueError(f"unknown origin {self.origin!r}")


class Dataset:
    """Immutable, index-addressable collection of samples."""

    __slots__ = ("f", "s", "h", "w", "origin")

    def __init__(self, f, s, h, w, origin):
        arrays = [np.asarray(a, dtype=float) for a in (f, s, h, w)]
        n = len(arrays[0])
        origin = np.asarray(origin, dtype=object)
        if any(len(a) != n for a in arrays[1:]) or len(origin) != n:
            raise LengthMismatch("dataset columns have unequal lengths")
        for a in arrays:
            a.setflags(write=False)
        origin.setflags(write=False)
        self.f, self.s, self.h, self.w = arrays
        self.origin = origin

    @classmethod
    def from_samples(cls, samples: Iterable[Sample]) -> "Dataset":
        samples = list(samples)
        return cls(
            [p.f for p in samples],
            [p.s for p in samples],
            [p.h for p in samples],
            [p.w for p in samples],
            [p.origin for p in samples],
        )

    def __len__(self) -> int:
        return len(self.f)

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.f[i], self.s[i], self.h[i], self.w[i], self.origin[i])

    def __iter__(self) -> Iterator[Sample]:
        return (self[i] for i in range(len(self)))

    @property
    def features(self) -> np.ndarray:
        """(N, 2) array of (f, s) pairs."""
        return np.stack([self.f, self.s], axis=1)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.f[idx], self.s[idx], self.h[idx], self.w[idx], self.origin[idx])

    def with_origin(self, origin: str) -> "Dataset":
        return Dataset(self.f, self.s, self.h, self.w, [origin] * len(self))

    def single_h(self) -> float:
        """The common h of the dataset; raises if h is mixed."""
        if len(self) == 0:
            raise EmptyDataset("empty dataset has no h")
        h = np.unique(self.h)
        if len(h) != 1:
            raise NotAGrid(f"dataset mixes h values {h}")
        return float(h[0])


def concat(a: Dataset, b: Dataset) -> Dataset:
    return Dataset(
        np.concatenate([a.f, b.f]),
        np.concatenate([a.s, b.s]),
        np.concatenate([a.h, b.h]),
        np.concatenate([a.w, b.w]),
        np.concatenate([a.origin, b.origin]),
    )


def load_csv(path, origin: str = ORIGIN_TARGET) -> Dataset:
    """Read a dataset CSV with the schema F_mm_per_min,S_mm_per_min,h_mm,W_mm.

    Row order is preserved. All rows receive the given origin tag.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in CSV_COLUMNS:
            if col not in header:
                raise MissingColumn(col)
        cols = {c: [] for c in CSV_COLUMNS}
        for row_idx, row in enumerate(reader):
            for col in CSV_COLUMNS:
                cell = row.get(col)
                try:
                    value = float(cell)
                except (TypeError, ValueError):
                    raise NonNumericCell(row_idx, col) from None
                if not np.isfinite(value):
                    raise NonNumericCell(row_idx, col)
                if col == "W_mm":
                    if value < 0:
                        raise NonPositiveValue(row_idx, col)
                elif value <= 0:
                    raise NonPositiveValue(row_idx, col)
                cols[col].append(value)
    n = len(cols["W_mm"])
    return Dataset(
        cols["F_mm_per_min"], cols["S_mm_per_min"], cols["h_mm"], cols["W_mm"],
        [origin] * n,
    )


def save_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(len(data)):
            writer.writerow(
                [repr(float(v)) for v in (data.f[i], data.s[i], data.h[i], data.w[i])]
            )


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardization of (f, s); population statistics."""

    mean_f: float
    mean_s: float
    std_f: float
    std_s: float

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X - [self.mean_f, self.mean_s]) / [self.std_f, self.std_s]

    def invert(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return Z * [self.std_f, self.std_s] + [self.mean_f, self.mean_s]

    def to_dict(self) -> dict:
        return {
            "mean_f": self.mean_f, "mean_s": self.mean_s,
            "std_f": self.std_f, "std_s": self.std_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(d["mean_f"], d["mean_s"], d["std_f"], d["std_s"])


def fit_scaler(data: Dataset) -> Scaler:
    """Population mean/std of f and s; a zero std is replaced by 1.0 so that
    constant features become inert instead of dividing by zero."""
    if len(data) == 0:
        raise EmptyDataset("cannot fit a scaler on an empty dataset")
    std_f = float(np.std(data.f))
    std_s = float(np.std(data.s))
    return Scaler(
        mean_f=float(np.mean(data.f)),
        mean_s=float(np.mean(data.s)),
        std_f=std_f if std_f > 0 else 1.0,
        std_s=std_s if std_s > 0 else 1.0,
    )


def random_split(data: Dataset, n_train: int, seed) -> tuple[Dataset, Dataset]:
    """Disjoint random partition into (train, test) with |train| = n_train.

    Deterministic for a fixed seed; `seed` may be an int or a Generator.
    """
    n = len(data)
    if not 0 < n_train < n:
        raise InvalidSize(f"n_train={n_train} must lie strictly between 0 and {n}")
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(int(seed))
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return data.subset(train_idx), data.subset(test_idx)


def _level_indices(n_levels: int, k: int) -> np.ndarray:
    return np.round(np.linspace(0, n_levels - 1, k)).astype(int)


def subgrid_select(data: Dataset, n_s: int, n_f: int) -> Dataset:
    """Samples at the intersection of n_s equidistant S levels and n_f
    equidistant F levels; missing grid cells are skipped."""
    s_levels = np.unique(data.s)
    f_levels = np.unique(data.f)
    pairs = set(zip(data.f.tolist(), data.s.tolist()))
    if len(pairs) != len(data):
        raise NotAGrid("duplicate (f, s) cells; data is not a grid")
    for k, levels, name in ((n_s, s_levels, "S"), (n_f, f_levels, "F")):
        if not 2 <= k <= len(levels):
            raise TooFewLevels(
                f"{name}: requested {k} levels, grid has {len(levels)} (need >= 2)"
            )
    s_chosen = s_levels[_level_indices(len(s_levels), n_s)]
    f_chosen = f_levels[_level_indices(len(f_levels), n_f)]
    mask = np.isin(data.s, s_chosen) & np.isin(data.f, f_chosen)
    return data.subset(np.flatnonzero(mask))


def rmse(predictions: Sequence[float], truths: Sequence[float]) -> float:
    """Root mean square error, sqrt(mean of squared residuals)."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} vs {t.shape}")
    if p.size == 0:
        raise EmptyDataset("rmse of empty sequences")
    return float(np.sqrt(np.mean((p - t) ** 2)))
