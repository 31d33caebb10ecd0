"""Dataset ingestion: IDX-format MNIST files and a synthetic fallback.

The fallback generates "blob digit" images: each class is a fixed template of
a few Gaussian bumps on a 28x28 canvas, and samples jitter the bump centers,
amplitudes and pixel noise.  Classes are linearly separable enough for a
small classifier and the images live on a low-dimensional manifold, which is
what the bottleneck experiments need.  Class templates come from a fixed
internal seed so the class structure is stable across sample seeds.
"""

import os
import struct

import numpy as np

from .engine.rng import spawn
from .errors import DataFormatError

__all__ = ["load_mnist_idx", "synthetic_mnist", "load_train_test"]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
_TEMPLATE_SEED = 20621


def _read_be32(fh, path, what):
    data = fh.read(4)
    if len(data) != 4:
        raise DataFormatError(f"{path}: truncated file while reading {what}")
    return struct.unpack(">i", data)[0]


def load_mnist_idx(images_path, labels_path):
    """Load IDX image/label files as (float64 [N, 784] in [0, 1], int64 [N]).

    IDX layout (big endian): images are i32 magic 0x803, count, rows, cols,
    then row-major uint8 pixels; labels are i32 magic 0x801, count, then
    uint8 labels.
    """
    for p in (images_path, labels_path):
        if not os.path.exists(p):
            raise DataFormatError(f"{p}: dataset file not found (expected IDX format at this path)")
    with open(images_path, "rb") as fh:
        magic = _read_be32(fh, images_path, "magic")
        if magic != IMAGE_MAGIC:
            raise DataFormatError(
                f"{images_path}: bad magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
        count = _read_be32(fh, images_path, "count")
        rows = _read_be32(fh, images_path, "rows")
        cols = _read_be32(fh, images_path, "cols")
        raw = fh.read(count * rows * cols)
        if len(raw) != count * rows * cols:
            raise DataFormatError(f"{images_path}: truncated pixel data "
                                  f"({len(raw)} bytes, expected {count * rows * cols})")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)
    with open(labels_path, "rb") as fh:
        magic = _read_be32(fh, labels_path, "magic")
        if magic != LABEL_MAGIC:
            raise DataFormatError(
                f"{labels_path}: bad magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
        n_labels = _read_be32(fh, labels_path, "count")
        raw = fh.read(n_labels)
        if len(raw) != n_labels:
            raise DataFormatError(f"{labels_path}: truncated label data")
        labels = np.frombuffer(raw, dtype=np.uint8)
    if count != n_labels:
        raise DataFormatError(
            f"image count {count} ({images_path}) != label count {n_labels} ({labels_path})")
    return images.astype(np.float64) / 255.0, labels.astype(np.int64)


# ---------------------------------------------------------------------------
# Synthetic fallback
# ---------------------------------------------------------------------------

def _class_templates(side=28, n_classes=10, bumps=3):
    rng = spawn(_TEMPLATE_SEED, 0)
    templates = []
    for _ in range(n_classes):
        centers = rng.uniform(5, side - 5, size=(bumps, 2))
        widths = rng.uniform(1.8, 3.5, size=bumps)
        amps = rng.uniform(0.7, 1.0, size=bumps)
        templates.append((centers, widths, amps))
    return templates


def _render(centers, widths, amps, side=28):
    yy, xx = np.mgrid[0:side, 0:side]
    img = np.zeros((side, side))
    for (cy, cx), w, a in zip(centers, widths, amps):
        img += a * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * w * w))
    return img


def synthetic_mnist(n_samples: int, seed: int = 0, side: int = 28, noise: float = 0.02):
    """Deterministic blob-digit dataset: (X [N, side*side] in [0, 1], y [N])."""
    templates = _class_templates(side=side)
    rng = spawn(seed, 1)
    labels = np.arange(n_samples) % len(templates)
    labels = rng.permutation(labels)
    X = np.empty((n_samples, side * side))
    for i, label in enumerate(labels):
        centers, widths, amps = templates[label]
        jitter_c = centers + rng.normal(0.0, 1.0, size=centers.shape)
        jitter_a = amps * rng.uniform(0.8, 1.2, size=amps.shape)
        img = _render(jitter_c, widths, jitter_a, side=side)
        img += rng.normal(0.0, noise, size=img.shape)
        X[i] = np.clip(img, 0.0, 1.0).ravel()
    return X, labels.astype(np.int64)


def load_train_test(synthetic: bool, subset: int, seed: int = 0, n_test: int = 2000,
                    mnist_images=None, mnist_labels=None,
                    mnist_test_images=None, mnist_test_labels=None):
    """Training subset plus test split, from IDX files or the fallback."""
    if synthetic:
        X_train, y_train = synthetic_mnist(subset, seed=seed)
        X_test, y_test = synthetic_mnist(n_test, seed=seed + 10_000)
        return X_train, y_train, X_test, y_test
    if not (mnist_images and mnist_labels and mnist_test_images and mnist_test_labels):
        raise DataFormatError(
            "real-data mode needs mnist_images, mnist_labels, mnist_test_images "
            "and mnist_test_labels paths (or set synthetic_data=true)")
    X_train, y_train = load_mnist_idx(mnist_images, mnist_labels)
    X_test, y_test = load_mnist_idx(mnist_test_images, mnist_test_labels)
    return X_train[:subset], y_train[:subset], X_test, y_test
