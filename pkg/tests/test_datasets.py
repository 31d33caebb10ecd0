import struct

import numpy as np
import pytest

from damlab.datasets import load_mnist_idx, load_train_test, synthetic_mnist
from damlab.errors import DataFormatError


def _write_idx_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", 0x00000803, n, rows, cols))
        fh.write(images.astype(np.uint8).tobytes())


def _write_idx_labels(path, labels):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", 0x00000801, len(labels)))
        fh.write(np.asarray(labels, dtype=np.uint8).tobytes())


@pytest.fixture
def idx_files(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(12, 28, 28), dtype=np.uint8)
    labels = rng.integers(0, 10, size=12, dtype=np.uint8)
    ip, lp = tmp_path / "imgs.idx", tmp_path / "labels.idx"
    _write_idx_images(ip, images)
    _write_idx_labels(lp, labels)
    return str(ip), str(lp), images, labels


def test_idx_roundtrip(idx_files):
    ip, lp, images, labels = idx_files
    X, y = load_mnist_idx(ip, lp)
    assert X.shape == (12, 784)
    assert X.min() >= 0.0 and X.max() <= 1.0
    np.testing.assert_allclose(X * 255.0, images.reshape(12, 784).astype(float), atol=1e-12)
    np.testing.assert_array_equal(y, labels)


def test_idx_all_zero_images(tmp_path):
    ip, lp = tmp_path / "z.idx", tmp_path / "zl.idx"
    _write_idx_images(ip, np.zeros((3, 4, 4), dtype=np.uint8))
    _write_idx_labels(lp, [0, 1, 2])
    X, _ = load_mnist_idx(str(ip), str(lp))
    np.testing.assert_array_equal(X, np.zeros((3, 16)))


def test_idx_wrong_magic(tmp_path, idx_files):
    _, lp, _, _ = idx_files
    bad = tmp_path / "bad.idx"
    with open(bad, "wb") as fh:
        fh.write(struct.pack(">iiii", 0x00000899, 1, 2, 2))
        fh.write(bytes(4))
    with pytest.raises(DataFormatError, match="bad magic"):
        load_mnist_idx(str(bad), lp)


def test_idx_truncated(tmp_path, idx_files):
    _, lp, _, _ = idx_files
    trunc = tmp_path / "trunc.idx"
    with open(trunc, "wb") as fh:
        fh.write(struct.pack(">iiii", 0x00000803, 5, 28, 28))
        fh.write(bytes(100))
    with pytest.raises(DataFormatError, match="truncated"):
        load_mnist_idx(str(trunc), lp)


def test_idx_count_mismatch(tmp_path):
    ip, lp = tmp_path / "i.idx", tmp_path / "l.idx"
    _write_idx_images(ip, np.zeros((3, 4, 4), dtype=np.uint8))
    _write_idx_labels(lp, [0, 1])
    with pytest.raises(DataFormatError, match="count"):
        load_mnist_idx(str(ip), str(lp))


def test_idx_missing_file_names_path(tmp_path, idx_files):
    ip, _, _, _ = idx_files
    with pytest.raises(DataFormatError, match="nowhere.idx"):
        load_mnist_idx(ip, str(tmp_path / "nowhere.idx"))


# ---------------------------------------------------------------------------
# synthetic fallback
# ---------------------------------------------------------------------------

def test_synthetic_deterministic_and_bounded():
    X1, y1 = synthetic_mnist(64, seed=5)
    X2, y2 = synthetic_mnist(64, seed=5)
    assert X1.tobytes() == X2.tobytes()
    np.testing.assert_array_equal(y1, y2)
    assert X1.shape == (64, 784)
    assert X1.min() >= 0.0 and X1.max() <= 1.0
    assert set(np.unique(y1)) <= set(range(10))


def test_synthetic_classes_balanced():
    _, y = synthetic_mnist(100, seed=1)
    counts = np.bincount(y, minlength=10)
    assert counts.min() == 10 and counts.max() == 10


def test_synthetic_varies_with_seed():
    X1, _ = synthetic_mnist(32, seed=1)
    X2, _ = synthetic_mnist(32, seed=2)
    assert not np.array_equal(X1, X2)


def test_load_train_test_synthetic():
    X_train, y_train, X_test, y_test = load_train_test(True, 128, seed=0, n_test=32)
    assert X_train.shape == (128, 784) and X_test.shape == (32, 784)
    assert y_train.shape == (128,) and y_test.shape == (32,)


def test_load_train_test_requires_paths_for_real_mode():
    with pytest.raises(DataFormatError, match="mnist_images"):
        load_train_test(False, 100)
