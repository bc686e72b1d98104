"""Datasets: CIFAR-10 binary batches, a synthetic two-class generator, one-hot labels."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ParameterError, RngState, float_dtype, sample_permutation
from .nn.checkpoint import MAGIC, FormatError, decode_tensors, encode_tensors

CIFAR_RECORD = 1 + 3 * 32 * 32
CIFAR_CLASSES = 10


@dataclass
class Dataset:
    images: np.ndarray  # (N, C, H, W) in [0, 1]
    labels: np.ndarray  # (N,) int64
    classes: int

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ParameterError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.classes):
            raise ParameterError(f"labels must lie in 0..{self.classes - 1}")

    def __len__(self):
        return int(self.labels.shape[0])

    def subset(self, limit: int | None) -> Dataset:
        if limit is None:
            return self
        return Dataset(self.images[:limit], self.labels[:limit], self.classes)


def one_hot(labels, classes: int, dtype=None) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ParameterError(f"label out of range for {classes} classes")
    out = np.zeros((labels.shape[0], classes), dtype=dtype or float_dtype())
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def decode_cifar10(data: bytes) -> Dataset:
    if len(data) % CIFAR_RECORD:
        raise FormatError(
            f"CIFAR-10 binary length {len(data)} is not a multiple of {CIFAR_RECORD}"
        )
    records = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = records[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels >= CIFAR_CLASSES)
    if bad.size:
        raise FormatError(f"record {bad[0]} has label byte {labels[bad[0]]} > 9")
    images = records[:, 1:].reshape(-1, 3, 32, 32).astype(float_dtype()) / 255.0
    return Dataset(images.astype(float_dtype(), copy=False), labels, CIFAR_CLASSES)


def load_cifar10_binary(paths) -> Dataset:
    """Concatenate one or more ``data_batch_*.bin`` style files."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    parts = [decode_cifar10(Path(p).read_bytes()) for p in paths]
    if not parts:
        raise ParameterError("no CIFAR-10 files given")
    return Dataset(
        np.concatenate([p.images for p in parts]),
        np.concatenate([p.labels for p in parts]),
        CIFAR_CLASSES,
    )


def encode_cifar10(ds: Dataset) -> bytes:
    """Inverse of :func:`decode_cifar10`; pixels are rounded to the nearest byte."""
    if ds.images.shape[1:] != (3, 32, 32) or ds.classes > CIFAR_CLASSES:
        raise ParameterError("only 3x32x32 images with at most 10 classes fit the CIFAR-10 layout")
    pixels = np.clip(np.rint(ds.images * 255.0), 0, 255).astype(np.uint8).reshape(len(ds), -1)
    records = np.concatenate([ds.labels.astype(np.uint8)[:, None], pixels], axis=1)
    return records.tobytes()


def gen_synthetic(n: int, size: int, rng: RngState, classes: int = 2, channels: int = 3) -> Dataset:
    """Bright square blob on a noise background; class 0 blobs sit in the left half, class 1 in the right.

    Noise is uniform on [0, 0.2), the blob adds 0.8 over a (size/4)-wide square.
    """
    if classes != 2:
        raise ParameterError("the synthetic generator produces exactly 2 classes")
    if size < 8 or size % 2:
        raise ParameterError(f"size must be an even number >= 8, got {size}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    blob = size // 4
    half = size // 2
    labels = np.array([0] * (n // 2) + [1] * (n - n // 2))
    labels = labels[sample_permutation(n, rng)]

    images = rng.uniform((n, channels, size, size)) * 0.2
    rows = rng.integers(size - blob + 1, size=n)
    cols = rng.integers(half - blob + 1, size=n) + labels * half
    for i in range(n):
        images[i, :, rows[i]:rows[i] + blob, cols[i]:cols[i] + blob] += 0.8
    return Dataset(images.astype(float_dtype()), labels.astype(np.int64), 2)


def dataset_to_tensors(ds: Dataset) -> dict[str, np.ndarray]:
    return {"images": ds.images, "labels": one_hot(ds.labels, ds.classes, np.float32)}


def dataset_from_tensors(tensors: dict[str, np.ndarray]) -> Dataset:
    try:
        images, soft = tensors["images"], tensors["labels"]
    except KeyError as exc:
        raise FormatError(f"dataset container lacks tensor {exc}") from None
    if images.ndim != 4 or soft.ndim != 2 or soft.shape[0] != images.shape[0]:
        raise FormatError(f"bad dataset tensors: images {images.shape}, labels {soft.shape}")
    labels = np.argmax(soft, axis=1)
    if not np.array_equal(soft, one_hot(labels, soft.shape[1], soft.dtype)):
        raise FormatError("labels are soft; a dataset needs one-hot rows")
    return Dataset(images.astype(float_dtype(), copy=False), labels, soft.shape[1])


def load_dataset(paths) -> Dataset:
    """Read RMX1 tensor containers or CIFAR-10 binary files and concatenate them.

    ``paths`` is a path or a comma-separated string / list of paths. The
    formats are told apart by the first bytes: a CIFAR label byte (0..9) is
    never the ``R`` of the container magic.
    """
    if isinstance(paths, (str, Path)):
        paths = [p.strip() for p in str(paths).split(",") if p.strip()]
    parts = []
    for p in paths:
        data = Path(p).read_bytes()
        if data[:4] == MAGIC:
            parts.append(dataset_from_tensors(decode_tensors(data)))
        else:
            parts.append(decode_cifar10(data))
    if not parts:
        raise ParameterError("no dataset files given")
    if len(parts) == 1:
        return parts[0]
    if len({(p.images.shape[1:], p.classes) for p in parts}) != 1:
        raise FormatError("dataset files disagree on image geometry or class count")
    return Dataset(
        np.concatenate([p.images for p in parts]),
        np.concatenate([p.labels for p in parts]),
        parts[0].classes,
    )


def save_dataset(path, ds: Dataset) -> None:
    Path(path).write_bytes(encode_tensors(dataset_to_tensors(ds)))
