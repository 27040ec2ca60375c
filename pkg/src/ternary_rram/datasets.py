"""MNIST (IDX) and CIFAR-10 (binary batch) readers. Pixels are scaled to [0, 1]."""

from dataclasses import dataclass
import gzip
import os

import numpy as np

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801
CIFAR_RECORD = 1 + 3 * 32 * 32
CIFAR_TRAIN = tuple(f"data_batch_{k}.bin" for k in range(1, 6))
CIFAR_TEST = "test_batch.bin"


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray  # float32 images
    y: np.ndarray  # int64 labels

    def __len__(self):
        return len(self.y)

    def subset(self, n):
        return Dataset(self.x[:n], self.y[:n])


def _read_bytes(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as f:
        return f.read()


def parse_idx(buf, expected_magic, path="<buffer>"):
    """Decode an IDX buffer (big-endian header) into a uint8 array."""
    if len(buf) < 4:
        raise DatasetFormatError(f"{path}: truncated at byte offset {len(buf)}: header needs 4 bytes")
    magic = int.from_bytes(buf[:4], "big")
    if magic != expected_magic:
        raise DatasetFormatError(
            f"{path}: bad magic 0x{magic:08x} at byte offset 0 (expected 0x{expected_magic:08x})")
    ndim = magic & 0xFF
    end = 4 + 4 * ndim
    if len(buf) < end:
        raise DatasetFormatError(f"{path}: truncated at byte offset {len(buf)}: header needs {end} bytes")
    dims = tuple(int.from_bytes(buf[4 + 4 * k:8 + 4 * k], "big") for k in range(ndim))
    need = end + int(np.prod(dims))
    if len(buf) < need:
        raise DatasetFormatError(
            f"{path}: truncated at byte offset {len(buf)}: dimensions {dims} need {need} bytes")
    return np.frombuffer(buf, dtype=np.uint8, count=need - end, offset=end).reshape(dims)


def read_idx(path, expected_magic):
    return parse_idx(_read_bytes(path), expected_magic, path)


def _find(directory, stem):
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        p = os.path.join(directory, name)
        if os.path.exists(p):
            return p
    raise FileNotFoundError(f"MNIST file {stem}[.gz] not found in {directory}")


def load_mnist(directory, split="train"):
    """Images as (N, 784) float32, labels as int64."""
    prefix = {"train": "train", "test": "t10k"}[split]
    images = read_idx(_find(directory, f"{prefix}-images-idx3-ubyte"), IDX_IMAGES)
    labels = read_idx(_find(directory, f"{prefix}-labels-idx1-ubyte"), IDX_LABELS)
    if images.shape[0] != labels.shape[0]:
        raise DatasetFormatError(f"{directory}: {images.shape[0]} images but {labels.shape[0]} labels")
    if labels.size and labels.max() > 9:
        raise DatasetFormatError(f"{directory}: label {int(labels.max())} out of range 0..9")
    x = images.reshape(images.shape[0], -1).astype(np.float32) / 255.0
    return Dataset(x, labels.astype(np.int64))


def parse_cifar_batch(buf, path="<buffer>"):
    if len(buf) % CIFAR_RECORD:
        off = len(buf) - len(buf) % CIFAR_RECORD
        raise DatasetFormatError(
            f"{path}: truncated record at byte offset {off}: {len(buf) - off} of {CIFAR_RECORD} bytes")
    rec = np.frombuffer(buf, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = rec[:, 0]
    bad = np.nonzero(labels > 9)[0]
    if bad.size:
        raise DatasetFormatError(f"{path}: label {int(labels[bad[0]])} at byte offset {int(bad[0]) * CIFAR_RECORD}")
    x = rec[:, 1:].reshape(-1, 3, 32, 32).astype(np.float32) / 255.0
    return Dataset(x, labels.astype(np.int64))


def load_cifar10(directory, split="train"):
    """Images as (N, 3, 32, 32) float32."""
    names = CIFAR_TRAIN if split == "train" else (CIFAR_TEST,)
    parts = [parse_cifar_batch(_read_bytes(os.path.join(directory, n)), os.path.join(directory, n)) for n in names]
    return Dataset(np.concatenate([p.x for p in parts]), np.concatenate([p.y for p in parts]))
