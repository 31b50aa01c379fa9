"""Synthetic datasets, label-noise models and file loaders."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

NOISE_KINDS = ("none", "uniform", "random_all")

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    clean_labels: np.ndarray | None = None
    split_tag: str = "train"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] == 0 or self.features.shape[1] == 0:
            raise ValueError(f"features must be a non-empty 2-d array, got shape {self.features.shape}")
        n = self.features.shape[0]
        if self.labels.shape != (n,):
            raise ValueError(f"expected {n} labels, got shape {self.labels.shape}")
        if self.class_count < 2:
            raise ValueError("class_count must be at least 2")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        if self.clean_labels is not None:
            self.clean_labels = np.asarray(self.clean_labels, dtype=np.int64)
            if self.clean_labels.shape != (n,):
                raise ValueError("clean_labels must have one entry per example")
        if self.split_tag not in ("train", "test"):
            raise ValueError(f"split_tag must be 'train' or 'test', got {self.split_tag!r}")

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self, clean: bool = False) -> np.ndarray:
        labels = self.clean_labels if clean else self.labels
        return np.bincount(labels, minlength=self.class_count)

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return replace(
            self,
            features=self.features[index],
            labels=self.labels[index],
            clean_labels=None if self.clean_labels is None else self.clean_labels[index],
        )


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"noise rate must be in [0, 1], got {self.rate}")


def mixture_means(class_count: int, dim: int, separation: float, seed: int) -> np.ndarray:
    """Class centres: random directions scaled to norm ``separation``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    directions = rng.normal(size=(class_count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return separation * directions


def make_gaussian_mixture(
    class_count: int,
    dim: int,
    per_class_counts,
    separation: float,
    spread: float,
    seed: int,
    split: str = "train",
) -> Dataset:
    """Isotropic Gaussian blobs, one per class.

    The class means depend only on ``seed``; the samples also depend on
    ``split``, so the train and test draws of one seed share a mixture but
    are independent.
    """
    if class_count < 2:
        raise ValueError("class_count must be at least 2")
    counts = np.asarray(per_class_counts, dtype=np.int64)
    if counts.shape != (class_count,):
        raise ValueError(f"per_class_counts needs {class_count} entries, got {counts.shape}")
    if (counts < 0).any() or (counts > 0).sum() < 2:
        raise ValueError("per_class_counts must be non-negative with at least two positive classes")
    if separation <= 0 or spread <= 0:
        raise ValueError("separation and spread must be positive")
    if dim <= 0:
        raise ValueError("dim must be positive")
    means = mixture_means(class_count, dim, separation, seed)
    split_index = {"train": 1, "test": 2}[split]
    rng = np.random.default_rng(np.random.SeedSequence([seed, split_index]))
    labels = np.repeat(np.arange(class_count), counts)
    features = means[labels] + spread * rng.normal(size=(labels.size, dim))
    order = rng.permutation(labels.size)
    labels = labels[order]
    return Dataset(features[order], labels, class_count, labels.copy(), split)


def inject_noise(ds: Dataset, spec: NoiseSpec) -> Dataset:
    """Corrupt labels; ``clean_labels`` keeps the pre-noise labels.

    ``uniform`` resamples each label with probability ``rate`` from all
    classes (the true class included); ``random_all`` resamples every label.
    """
    clean = ds.labels.copy() if ds.clean_labels is None else ds.clean_labels.copy()
    if spec.kind == "none" or (spec.kind == "uniform" and spec.rate == 0.0):
        return replace(ds, labels=ds.labels.copy(), clean_labels=clean)
    rng = np.random.default_rng(spec.seed)
    n = len(ds)
    selected = rng.random(n) < spec.rate
    drawn = rng.integers(0, ds.class_count, size=n)
    if spec.kind == "random_all":
        selected[:] = True
    labels = np.where(selected, drawn, ds.labels)
    return replace(ds, labels=labels, clean_labels=clean)


def make_imbalanced(ds: Dataset, majority_class: int, minority_class: int, ratio: float, seed: int) -> Dataset:
    """Two-class subset with ``count(majority) / count(minority) = ratio``.

    Every available majority example is kept; ``floor(majority / ratio)``
    minority examples are sampled. Labels become 0 (majority) and 1 (minority).
    """
    if ratio < 1:
        raise ValueError("ratio must be >= 1")
    if majority_class == minority_class:
        raise ValueError("majority and minority class must differ")
    maj_idx = np.flatnonzero(ds.labels == majority_class)
    min_idx = np.flatnonzero(ds.labels == minority_class)
    if maj_idx.size == 0 or min_idx.size == 0:
        raise ValueError("both classes must be present in the dataset")
    n_min = int(np.floor(maj_idx.size / ratio + 1e-9))
    if n_min == 0:
        raise ValueError(f"ratio {ratio} leaves no minority examples (majority count {maj_idx.size})")
    if n_min > min_idx.size:
        raise ValueError(f"need {n_min} minority examples but only {min_idx.size} are available")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(min_idx, size=n_min, replace=False))
    keep = np.sort(np.concatenate([maj_idx, chosen]))
    clean = None
    if ds.clean_labels is not None:
        # clean labels outside the two retained classes have no image in {0, 1}
        c = ds.clean_labels[keep]
        clean = np.where(c == majority_class, 0, np.where(c == minority_class, 1, -1))
        if (clean < 0).any():
            clean = None
    labels = np.where(ds.labels[keep] == majority_class, 0, 1)
    return Dataset(ds.features[keep], labels, 2, clean, ds.split_tag)


def load_csv(path, class_count: int | None = None, split_tag: str = "train") -> Dataset:
    """Headerless CSV, one example per row, integer label in the last column."""
    rows, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}: row {lineno}: need at least one feature and a label")
            try:
                feats = [float(c) for c in row[:-1]]
                label = int(row[-1])
            except ValueError as exc:
                raise ValueError(f"{path}: row {lineno}: {exc}") from None
            if rows and len(feats) != len(rows[0]):
                raise ValueError(f"{path}: row {lineno}: expected {len(rows[0])} features, got {len(feats)}")
            if label < 0 or (class_count is not None and label >= class_count):
                raise ValueError(f"{path}: row {lineno}: label {label} out of range")
            rows.append(feats)
            labels.append(label)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    labels = np.array(labels, dtype=np.int64)
    if class_count is None:
        class_count = max(int(labels.max()) + 1, 2)
    return Dataset(np.array(rows), labels, class_count, labels.copy(), split_tag)


def save_csv(ds: Dataset, path) -> None:
    """Write ``ds`` in the format :func:`load_csv` reads (noisy labels last)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, y in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def _read_idx(path, expected_magic: int):
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated header at byte offset {len(raw)}")
    (magic,) = struct.unpack_from(">I", raw, 0)
    if magic != expected_magic:
        raise ValueError(f"{path}: bad magic 0x{magic:08x} at byte offset 0, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise ValueError(f"{path}: truncated dimension header at byte offset {len(raw)}")
    dims = struct.unpack_from(f">{ndim}I", raw, 4)
    size = int(np.prod(dims))
    if len(raw) != header_end + size:
        raise ValueError(
            f"{path}: payload ends at byte offset {len(raw)}, expected {header_end + size} for dims {dims}"
        )
    data = np.frombuffer(raw, dtype=np.uint8, offset=header_end).reshape(dims)
    return data


def load_idx(images_path, labels_path, class_count: int | None = None, split_tag: str = "train") -> Dataset:
    """MNIST-style IDX pair: uint8 images (magic 2051) and labels (magic 2049)."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC).astype(np.int64)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(f"image count {images.shape[0]} does not match label count {labels.shape[0]}")
    if class_count is None:
        class_count = max(int(labels.max()) + 1, 2)
    elif labels.max() >= class_count:
        bad = int(np.argmax(labels >= class_count))
        raise ValueError(f"{labels_path}: label at byte offset {8 + bad} out of range")
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(features, labels, class_count, labels.copy(), split_tag)
