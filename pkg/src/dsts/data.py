"""Dataset ingestion, length normalization, class weights, splits, and batch sampling.

On-disk format (UTF-8, LF line endings):

  data.csv    header exactly ``sample_id,t,f0,...,f{d-1}``; rows grouped by
              sample_id with t ascending contiguously from 0.
  labels.csv  header exactly ``sample_id,label``; label in {0, 1}, 1 = ASD
              (the positive class).

Samples are ordered by first appearance in labels.csv. Floats are written
with 17 significant digits, so a save/load round-trip is bit-exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, DegenerateInputError, ShapeError
from .losses import ClassWeights
from .numerics import Rng, Tensor, derive_seed
from .serialize import atomic_write_text, fmt17

NUM_CLASSES = 2  # 0 = TD, 1 = ASD


@dataclass
class Sample:
    id: str
    seq: Tensor  # [T, d], T >= 1, all values finite
    label: int


@dataclass
class Dataset:
    samples: list[Sample]
    d: int
    class_counts: list[int]  # indexed by label

    @staticmethod
    def from_samples(samples: list[Sample], d: int | None = None) -> "Dataset":
        if d is None:
            if not samples:
                raise ConfigError("cannot infer feature count from an empty sample list")
            d = samples[0].seq.shape[1]
        counts = [0] * NUM_CLASSES
        for s in samples:
            if s.seq.ndim != 2 or s.seq.shape[1] != d:
                raise ShapeError(
                    f"sample {s.id!r} has shape {list(s.seq.shape)}, expected [T, {d}]"
                )
            if s.seq.shape[0] < 1:
                raise ShapeError(f"sample {s.id!r} has no time steps")
            if s.label not in range(NUM_CLASSES):
                raise ConfigError(f"sample {s.id!r} has label {s.label}, expected 0 or 1")
            counts[s.label] += 1
        return Dataset(samples=list(samples), d=d, class_counts=counts)

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.samples)


def _expected_header(d: int) -> list[str]:
    return ["sample_id", "t"] + [f"f{j}" for j in range(d)]


def load_dataset(directory: str | Path) -> Dataset:
    """Load data.csv + labels.csv from a directory, validating the format."""
    directory = Path(directory)
    data_path = directory / "data.csv"
    labels_path = directory / "labels.csv"
    for p in (data_path, labels_path):
        if not p.is_file():
            raise DataFormatError(f"missing required file {p}")

    with open(labels_path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["sample_id", "label"]:
        raise DataFormatError(
            f"labels.csv header must be 'sample_id,label', got {rows[0] if rows else 'nothing'}"
        )
    labels: dict[str, int] = {}
    order: list[str] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DataFormatError(f"labels.csv line {line_no}: expected 2 columns, got {len(row)}")
        sid, raw = row
        if sid in labels:
            raise DataFormatError(f"labels.csv line {line_no}: duplicate sample id {sid!r}")
        if raw not in ("0", "1"):
            raise DataFormatError(f"labels.csv line {line_no}: label must be 0 or 1, got {raw!r}")
        labels[sid] = int(raw)
        order.append(sid)

    with open(data_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("data.csv is empty") from None
        d = len(header) - 2
        if d < 1 or header != _expected_header(d):
            raise DataFormatError(
                f"data.csv header must be 'sample_id,t,f0,...', got {','.join(header)}"
            )
        rows_by_id: dict[str, list[list[float]]] = {}
        current: str | None = None
        for line_no, row in enumerate(reader, start=2):
            if len(row) != d + 2:
                raise DataFormatError(
                    f"data.csv line {line_no}: expected {d + 2} columns, got {len(row)}"
                )
            sid = row[0]
            if sid != current:
                if sid in rows_by_id:
                    raise DataFormatError(
                        f"data.csv line {line_no}: rows for sample {sid!r} are not grouped"
                    )
                rows_by_id[sid] = []
                current = sid
            try:
                t = int(row[1])
                feats = [float(v) for v in row[2:]]
            except ValueError:
                raise DataFormatError(f"data.csv line {line_no}: non-numeric value") from None
            if t != len(rows_by_id[sid]):
                raise DataFormatError(
                    f"data.csv line {line_no}: t values for sample {sid!r} must be "
                    f"contiguous from 0, got {t}"
                )
            if not all(math.isfinite(v) for v in feats):
                raise DataFormatError(f"data.csv line {line_no}: non-finite feature value")
            rows_by_id[sid].append(feats)

    missing = [sid for sid in order if sid not in rows_by_id]
    if missing:
        raise DataFormatError(f"labels.csv references ids absent from data.csv: {missing[:5]}")
    unlabeled = [sid for sid in rows_by_id if sid not in labels]
    if unlabeled:
        raise DataFormatError(f"data.csv contains ids absent from labels.csv: {unlabeled[:5]}")

    samples = [
        Sample(id=sid, seq=np.array(rows_by_id[sid], dtype=np.float64), label=labels[sid])
        for sid in order
    ]
    return Dataset.from_samples(samples, d=d)


def save_dataset(ds: Dataset, directory: str | Path) -> None:
    """Write data.csv and labels.csv atomically in the documented format."""
    directory = Path(directory)
    data_lines = [",".join(_expected_header(ds.d))]
    for s in ds.samples:
        if not np.all(np.isfinite(s.seq)):
            raise ConfigError(f"sample {s.id!r} contains non-finite features")
        for t in range(s.seq.shape[0]):
            data_lines.append(
                ",".join([s.id, str(t)] + [fmt17(v) for v in s.seq[t]])
            )
    label_lines = ["sample_id,label"] + [f"{s.id},{s.label}" for s in ds.samples]
    atomic_write_text(directory / "data.csv", "\n".join(data_lines) + "\n")
    atomic_write_text(directory / "labels.csv", "\n".join(label_lines) + "\n")


def resample_to_length(seq: Tensor, t_target: int) -> Tensor:
    """Per-feature linear interpolation of [T,d] onto t_target steps."""
    T, d = seq.shape
    if T < 1 or t_target < 1:
        raise ShapeError(f"sequence lengths must be >= 1, got T={T}, target={t_target}")
    if T == t_target:
        return seq.copy()
    if T == 1:
        return np.repeat(seq, t_target, axis=0)
    if t_target == 1:
        positions = np.array([0.0])
    else:
        positions = np.arange(t_target) * (T - 1) / (t_target - 1)
    src = np.arange(T, dtype=np.float64)
    out = np.empty((t_target, d), dtype=np.float64)
    for j in range(d):
        out[:, j] = np.interp(positions, src, seq[:, j])
    return out


def class_weights(labels) -> ClassWeights:
    """Inverse-frequency weights w_c = n_total / (C * n_c), mean-1 normalized."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=NUM_CLASSES)
    if len(counts) > NUM_CLASSES or np.any(counts[:NUM_CLASSES] == 0):
        raise DegenerateInputError(
            f"every class in 0..{NUM_CLASSES - 1} must be present, got counts {counts.tolist()}"
        )
    n_total = counts.sum()
    return ClassWeights(n_total / (NUM_CLASSES * counts.astype(np.float64)))


def stratified_split(ds: Dataset, test_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class shuffled partition; each class contributes round(n_c * frac) test samples."""
    if not 0.0 <= test_frac < 1.0:
        raise ConfigError(f"test_frac must lie in [0, 1), got {test_frac}")
    labels = ds.labels()
    test_idx: set[int] = set()
    for label in range(NUM_CLASSES):
        members = np.flatnonzero(labels == label)
        rng = Rng(derive_seed(seed, label))
        perm = members[rng.permutation(len(members))]
        n_test = int(math.floor(len(members) * test_frac + 0.5))
        test_idx.update(perm[:n_test].tolist())
    train_samples = [s for i, s in enumerate(ds.samples) if i not in test_idx]
    test_samples = [s for i, s in enumerate(ds.samples) if i in test_idx]
    return (
        Dataset.from_samples(train_samples, d=ds.d),
        Dataset.from_samples(test_samples, d=ds.d),
    )


class _Pool:
    """Shuffled per-class index pool that reshuffles once exhausted."""

    def __init__(self, indices: np.ndarray, rng: Rng):
        self.indices = indices
        self.rng = rng
        self.order = indices[rng.permutation(len(indices))]
        self.pos = 0

    def draw(self, n: int) -> list[int]:
        out: list[int] = []
        while len(out) < n:
            if self.pos == len(self.order):
                self.order = self.indices[self.rng.permutation(len(self.indices))]
                self.pos = 0
            out.append(int(self.order[self.pos]))
            self.pos += 1
        return out


def balanced_batches(ds: Dataset, p: int, k: int, seed: int) -> list[list[int]]:
    """Index batches of p classes x k samples each.

    The majority class is drawn without replacement until exhausted, which
    fixes the epoch at ceil(n_major / k) batches; smaller classes cycle
    through reshuffled copies of themselves as needed, so every batch holds
    exactly k members of each selected class. When p is below the number of
    present classes, the p most frequent classes (ties toward the lower
    label) are used.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2 so batches contain positive pairs, got {k}")
    labels = ds.labels()
    present = [c for c in range(NUM_CLASSES) if np.any(labels == c)]
    if p < 1 or p > len(present):
        raise ConfigError(f"p must lie in [1, {len(present)}], got {p}")
    by_count = sorted(present, key=lambda c: (-int(np.sum(labels == c)), c))
    chosen = sorted(by_count[:p])
    majority = by_count[0]
    n_batches = math.ceil(int(np.sum(labels == majority)) / k)
    pools = {
        c: _Pool(np.flatnonzero(labels == c), Rng(derive_seed(seed, c)))
        for c in chosen
    }
    return [[i for c in chosen for i in pools[c].draw(k)] for _ in range(n_batches)]


@dataclass
class Standardization:
    mean: Tensor  # [d]
    std: Tensor   # [d], constant features get std 1


def fit_standardization(ds: Dataset) -> Standardization:
    """Per-feature mean/std over every time step of every sample."""
    stacked = np.concatenate([s.seq for s in ds.samples], axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)
    return Standardization(mean=mean, std=std)


def apply_standardization(ds: Dataset, st: Standardization) -> Dataset:
    samples = [
        Sample(id=s.id, seq=(s.seq - st.mean) / st.std, label=s.label)
        for s in ds.samples
    ]
    return Dataset.from_samples(samples, d=ds.d)
