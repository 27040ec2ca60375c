import gzip

import numpy as np
import pytest

from conftest import MNIST_DIR, needs_mnist
from ternary_rram import datasets
from ternary_rram.datasets import DatasetFormatError, parse_cifar_batch, parse_idx


def _idx(magic, arr):
    head = magic.to_bytes(4, "big") + b"".join(int(d).to_bytes(4, "big") for d in arr.shape)
    return head + arr.astype(np.uint8).tobytes()


def _write_mnist(d, n=7, gz=False, name_style="-idx"):
    rng = np.random.default_rng(1)
    imgs = rng.integers(0, 256, (n, 28, 28))
    labels = rng.integers(0, 10, n)
    for split in ("train", "t10k"):
        for kind, magic, arr in (("images-idx3", 0x803, imgs), ("labels-idx1", 0x801, labels)):
            name = f"{split}-{kind}-ubyte".replace("-idx", name_style)
            data = _idx(magic, arr)
            if gz:
                (d / (name + ".gz")).write_bytes(gzip.compress(data))
            else:
                (d / name).write_bytes(data)
    return imgs, labels


@pytest.mark.parametrize("gz,style", [(False, "-idx"), (True, "-idx"), (False, ".idx")])
def test_synthetic_mnist_round_trip(tmp_path, gz, style):
    imgs, labels = _write_mnist(tmp_path, gz=gz, name_style=style)
    ds = datasets.load_mnist(tmp_path, "train")
    assert ds.x.shape == (7, 784) and ds.x.dtype == np.float32 and ds.y.dtype == np.int64
    assert np.array_equal(ds.x, imgs.reshape(7, -1).astype(np.float32) / 255)
    assert np.array_equal(ds.y, labels)
    assert len(datasets.load_mnist(tmp_path, "test")) == 7


def test_idx_bad_magic_names_offset():
    buf = _idx(0x803, np.zeros((1, 2, 2)))
    with pytest.raises(DatasetFormatError, match="bad magic 0x00000803 at byte offset 0"):
        parse_idx(buf, 0x801)


@pytest.mark.parametrize("cut", [2, 9, 18])
def test_idx_truncation_names_offset(cut):
    buf = _idx(0x803, np.zeros((1, 2, 2)))[:cut]
    with pytest.raises(DatasetFormatError, match=f"truncated at byte offset {cut}"):
        parse_idx(buf, 0x803)


def test_missing_mnist_files(tmp_path):
    with pytest.raises(FileNotFoundError, match="not found"):
        datasets.load_mnist(tmp_path)


def test_image_label_count_mismatch(tmp_path):
    _write_mnist(tmp_path)
    (tmp_path / "train-labels-idx1-ubyte").write_bytes(_idx(0x801, np.zeros(3)))
    with pytest.raises(DatasetFormatError, match="7 images but 3 labels"):
        datasets.load_mnist(tmp_path)


def test_cifar_records(tmp_path):
    rng = np.random.default_rng(0)
    rec = rng.integers(0, 256, (5, 3073)).astype(np.uint8)
    rec[:, 0] = [0, 3, 9, 1, 2]
    ds = parse_cifar_batch(rec.tobytes())
    assert ds.x.shape == (5, 3, 32, 32)
    assert np.array_equal(ds.y, [0, 3, 9, 1, 2])
    assert ds.x[1, 2, 31, 31] == np.float32(rec[1, -1]) / np.float32(255)
    with pytest.raises(DatasetFormatError, match="byte offset 12292"):
        parse_cifar_batch(rec.tobytes()[:-10])
    rec[2, 0] = 11
    with pytest.raises(DatasetFormatError, match="label 11 at byte offset 6146"):
        parse_cifar_batch(rec.tobytes())


def test_cifar_directory(tmp_path):
    rec = np.zeros((2, 3073), np.uint8)
    for n in datasets.CIFAR_TRAIN + (datasets.CIFAR_TEST,):
        (tmp_path / n).write_bytes(rec.tobytes())
    assert len(datasets.load_cifar10(tmp_path, "train")) == 10
    assert len(datasets.load_cifar10(tmp_path, "test")) == 2


@needs_mnist
def test_real_mnist_shapes():
    tr = datasets.load_mnist(MNIST_DIR, "train")
    te = datasets.load_mnist(MNIST_DIR, "test")
    assert tr.x.shape == (60000, 784) and te.x.shape == (10000, 784)
    assert set(np.unique(tr.y)) == set(range(10))
    assert 0.0 <= tr.x.min() and tr.x.max() == 1.0
