"""Dataset construction: 1-d grids, IDX (MNIST) files, subsets, synthetic clusters."""

import gzip
import os
import struct

import numpy as np

from ..errors import BadMagic, CountMismatch, CountTooLarge, TruncatedFile
from ..mlp import Dataset

GRID_LIMIT = 3.14

TARGETS_1D = {
    "sin1_3": lambda x: np.sin(x) + np.sin(3 * x),
    "sin1_3_5": lambda x: np.sin(x) + np.sin(3 * x) + np.sin(5 * x),
}

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def build_1d_dataset(target_id, n=201):
    """``n`` evenly spaced points on [-3.14, 3.14], both ends included."""
    if n < 2:
        raise ValueError("need at least two grid points")
    try:
        f = TARGETS_1D[target_id]
    except KeyError:
        raise ValueError(f"unknown 1-d target {target_id!r}") from None
    x = np.linspace(-GRID_LIMIT, GRID_LIMIT, n)
    # exact mirror symmetry (linspace leaves ~1e-15 at the midpoint)
    x = 0.5 * (x - x[::-1])
    return Dataset(x, f(x))


def _read(path):
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse_idx(raw, magic, ndim, what):
    if len(raw) < 4:
        raise TruncatedFile(f"{what}: file shorter than its magic number")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise BadMagic(f"{what}: magic 0x{got:08x}, expected 0x{magic:08x}")
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise TruncatedFile(f"{what}: header truncated")
    dims = struct.unpack(">" + "I" * ndim, raw[4:head])
    count = int(np.prod(dims))
    if len(raw) < head + count:
        raise TruncatedFile(f"{what}: expected {count} data bytes, found {len(raw) - head}")
    data = np.frombuffer(raw, dtype=np.uint8, count=count, offset=head)
    return data.reshape(dims)


def load_idx(images_path, labels_path):
    """Read an IDX image/label pair.

    Returns a :class:`Dataset` whose inputs are flattened pixels scaled to
    [0, 1] and whose targets are 10-dimensional one-hot labels.
    """
    images = _parse_idx(_read(images_path), IMAGES_MAGIC, 3, os.path.basename(str(images_path)))
    labels = _parse_idx(_read(labels_path), LABELS_MAGIC, 1, os.path.basename(str(labels_path)))
    if len(images) != len(labels):
        raise CountMismatch(f"{len(images)} images but {len(labels)} labels")
    x = images.reshape(len(images), -1).astype(float) / 255.0
    y = np.zeros((len(labels), 10))
    y[np.arange(len(labels)), labels] = 1.0
    return Dataset(x, y)


def write_idx(images, labels, images_path, labels_path):
    """Inverse of :func:`load_idx` for uint8 arrays (used to build fixtures)."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGES_MAGIC, *images.shape))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", LABELS_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def subsample_indices(n, count, seed):
    if count > n:
        raise CountTooLarge(f"cannot draw {count} samples from {n}")
    return np.random.default_rng(seed).choice(n, size=count, replace=False)


def subsample(data, count, seed):
    """Uniform draw of ``count`` samples without replacement."""
    idx = subsample_indices(len(data), count, seed)
    return Dataset(data.inputs[idx], data.targets[idx])


def gaussian_clusters(n=550, dim=20, classes=10, seed=0, spread=0.3, flip=0.2):
    """Seeded stand-in for an image classification subset.

    Class centres are standard normal, samples scatter around them with
    standard deviation ``spread``; a fraction ``flip`` of the labels is
    reassigned at random, which puts energy into the high-frequency part of
    the label function. Targets are one-hot.
    """
    rng = np.random.default_rng(seed)
    centres = rng.standard_normal((classes, dim))
    cls = rng.integers(0, classes, size=n)
    x = centres[cls] + spread * rng.standard_normal((n, dim))
    lab = cls.copy()
    flipped = rng.random(n) < flip
    lab[flipped] = rng.integers(0, classes, size=int(flipped.sum()))
    y = np.zeros((n, classes))
    y[np.arange(n), lab] = 1.0
    return Dataset(x, y)
