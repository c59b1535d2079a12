"""IDX ingestion, balanced binary splits and synthetic blob data."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class BadMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class CountMismatchError(IdxError):
    pass


class InsufficientExamplesError(ValueError):
    pass


@dataclass
class Dataset:
    examples: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, str] = ("0", "1")
    source: str = "synthetic"

    def __post_init__(self):
        self.examples = np.asarray(self.examples, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.examples.ndim != 2:
            raise ValueError("examples must be a 2-d array")
        if len(self.examples) != len(self.labels):
            raise ValueError(f"{len(self.examples)} examples but {len(self.labels)} labels")

    def __len__(self):
        return len(self.labels)

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.examples[indices], self.labels[indices], self.class_names, self.source)


@dataclass
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    basis_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    seed: int = 0


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _header(buf: bytes, n_ints: int, what: str) -> tuple[int, ...]:
    need = 4 * n_ints
    if len(buf) < need:
        raise TruncatedFileError(f"{what}: header needs {need} bytes, file ends at byte offset {len(buf)}")
    return struct.unpack(f">{n_ints}I", buf[:need])


def parse_idx_images(buf: bytes) -> np.ndarray:
    magic, = _header(buf, 1, "images")
    if magic != IMAGES_MAGIC:
        raise BadMagicError(f"images: magic 0x{magic:08x} at byte offset 0, expected 0x{IMAGES_MAGIC:08x}")
    _, count, rows, cols = _header(buf, 4, "images")
    size = count * rows * cols
    if len(buf) - 16 < size:
        raise TruncatedFileError(
            f"images: expected {size} pixel bytes from byte offset 16, file ends at byte offset {len(buf)}"
        )
    return np.frombuffer(buf, dtype=np.uint8, count=size, offset=16).reshape(count, rows, cols)


def parse_idx_labels(buf: bytes) -> np.ndarray:
    magic, = _header(buf, 1, "labels")
    if magic != LABELS_MAGIC:
        raise BadMagicError(f"labels: magic 0x{magic:08x} at byte offset 0, expected 0x{LABELS_MAGIC:08x}")
    _, count = _header(buf, 2, "labels")
    if len(buf) - 8 < count:
        raise TruncatedFileError(
            f"labels: expected {count} label bytes from byte offset 8, file ends at byte offset {len(buf)}"
        )
    return np.frombuffer(buf, dtype=np.uint8, count=count, offset=8).copy()


def load_idx(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    """Read an IDX image/label file pair (optionally gzipped).

    Returns flattened images scaled to [0, 1] with shape ``(n, rows*cols)``
    and the integer labels.
    """
    images = parse_idx_images(_read_bytes(images_path))
    labels = parse_idx_labels(_read_bytes(labels_path))
    if len(images) != len(labels):
        raise CountMismatchError(
            f"image count {len(images)} (byte offset 4 of images) != label count {len(labels)} (byte offset 4 of labels)"
        )
    return images.reshape(len(images), -1).astype(float) / 255.0, labels.astype(int)


def standardize(X, mean: float, std: float) -> np.ndarray:
    return (np.asarray(X, dtype=float) - mean) / std


def balanced_split(labels, n_train_per_class: int, n_test_per_class: int, seed: int) -> SplitPlan:
    """Disjoint, exactly class-balanced train/test index sets over 0/1 labels."""
    labels = np.asarray(labels)
    gen = rng.stream(seed, rng.SPLIT)
    train, test = [], []
    for cls in (1, 0):
        members = np.flatnonzero(labels == cls)
        need = n_train_per_class + n_test_per_class
        if len(members) < need:
            raise InsufficientExamplesError(f"class {cls} has {len(members)} examples, need {need}")
        picked = gen.choice(members, size=need, replace=False)
        train.append(picked[:n_train_per_class])
        test.append(picked[n_train_per_class:])
    return SplitPlan(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)), seed=seed)


def make_binary_task(images, labels, positive_digit: int = 1, negative_digit: int = 7,
                     n_train_per_class: int = 500, n_test_per_class: int = 500,
                     seed: int = 0) -> tuple[Dataset, SplitPlan]:
    """Restrict a digit dataset to two classes and split it.

    The positive digit gets label 1.  The returned dataset holds only the two
    digits; plan indices refer to rows of that dataset.
    """
    labels = np.asarray(labels)
    keep = np.flatnonzero((labels == positive_digit) | (labels == negative_digit))
    data = Dataset(
        np.asarray(images, dtype=float)[keep],
        (labels[keep] == positive_digit).astype(int),
        class_names=(str(negative_digit), str(positive_digit)),
        source="idx",
    )
    return data, balanced_split(data.labels, n_train_per_class, n_test_per_class, seed)


def select_basis(plan: SplitPlan, labels, n_per_class: int, seed: int) -> np.ndarray:
    labels = np.asarray(labels)
    gen = rng.stream(seed, rng.BASIS)
    train = np.asarray(plan.train_indices)
    picked = []
    for cls in (1, 0):
        members = train[labels[train] == cls]
        if len(members) < n_per_class:
            raise InsufficientExamplesError(
                f"training set has {len(members)} examples of class {cls}, need {n_per_class}"
            )
        picked.append(gen.choice(members, size=n_per_class, replace=False))
    return np.sort(np.concatenate(picked))


def synth_blobs(n_per_class: int, dim: int, separation: float, noise: float, seed: int) -> Dataset:
    """Two isotropic Gaussian clusters at +/- separation/2 along the all-ones diagonal."""
    if n_per_class < 1 or dim < 1:
        raise ValueError("n_per_class and dim must be at least 1")
    if separation < 0 or noise < 0:
        raise ValueError("separation and noise must be non-negative")
    gen = rng.stream(seed, rng.SYNTH)
    u = np.full(dim, 1.0 / np.sqrt(dim))
    centers = np.stack([-0.5 * separation * u, 0.5 * separation * u])
    labels = np.repeat([1, 0], n_per_class)
    X = centers[labels] + noise * gen.standard_normal((2 * n_per_class, dim))
    return Dataset(X, labels, class_names=("negative", "positive"), source="synthetic")
