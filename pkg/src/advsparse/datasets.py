"""Synthetic datasets and their on-disk format.

Three desk-scale generators: linearly separable Gaussian blobs, concentric
rings (radially separable, not linearly), and a sign-parity XOR layout.
Datasets are stored as headerless CSV (one row = features then the integer
label) next to a JSON sidecar holding {n, classes, generator, seed, ...}.
Generation is deterministic in the seed and files are byte-identical
across reruns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import STREAM_DATA, substream

__all__ = [
    "Dataset",
    "DATASET_FORMAT_VERSION",
    "GENERATORS",
    "make_gaussian_blobs",
    "make_concentric_rings",
    "make_xor_grid",
    "generate",
    "save_dataset",
    "load_dataset",
    "sidecar_path",
]

DATASET_FORMAT_VERSION = 1


@dataclass
class Dataset:
    """Feature rows X (m, n), integer labels y (m,), and the class count."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be (m, n) with matching labels y of shape (m,)")
        if self.n_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.n_classes}")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def _check_common(n: int, n_classes: int, size: int, noise: float) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"feature dimension must be an integer >= 2, got {n!r}")
    if int(n_classes) != n_classes or n_classes < 2:
        raise ValueError(f"class count must be an integer >= 2, got {n_classes!r}")
    if int(size) != size or size < 1:
        raise ValueError(f"dataset size must be an integer >= 1, got {size!r}")
    if noise < 0.0:
        raise ValueError(f"noise must be >= 0, got {noise}")


def make_gaussian_blobs(
    n: int, n_classes: int, size: int, noise: float, seed: int, separation: float = 3.0
) -> Dataset:
    """Isotropic Gaussian clusters with unit-sphere centers scaled by `separation`.

    At the default separation/noise ratio two blobs in moderate dimension
    are linearly separable up to a small Bayes error.
    """
    _check_common(n, n_classes, size, noise)
    rng = substream(seed, STREAM_DATA)
    centers = rng.standard_normal((n_classes, n))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)
    y = np.arange(size) % n_classes
    X = centers[y] + noise * rng.standard_normal((size, n))
    meta = {"generator": "gaussian-blobs", "seed": int(seed), "noise": float(noise),
            "separation": float(separation)}
    return Dataset(X, y, int(n_classes), meta)


def make_concentric_rings(
    n: int, n_classes: int, size: int, noise: float, seed: int, spacing: float = 2.0
) -> Dataset:
    """Concentric spherical shells: class c sits at radius spacing*(c+1).

    Radially separable but far from linearly separable around the origin.
    """
    _check_common(n, n_classes, size, noise)
    rng = substream(seed, STREAM_DATA)
    y = np.arange(size) % n_classes
    dirs = rng.standard_normal((size, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = spacing * (y + 1) + noise * rng.standard_normal(size)
    X = dirs * radii[:, None]
    meta = {"generator": "concentric-rings", "seed": int(seed), "noise": float(noise),
            "spacing": float(spacing)}
    return Dataset(X, y, int(n_classes), meta)


def make_xor_grid(n: int, n_classes: int, size: int, noise: float, seed: int) -> Dataset:
    """Sign-parity XOR on the first two coordinates; requires exactly 2 classes.

    Points fill [-1, 1]^n, the label is the XOR of the first two coordinate
    signs, and `noise` jitters points after labeling (so large noise adds
    label noise near the quadrant boundaries).
    """
    _check_common(n, n_classes, size, noise)
    if n_classes != 2:
        raise ValueError(f"xor-grid is a two-class layout, got n_classes={n_classes}")
    rng = substream(seed, STREAM_DATA)
    X = rng.uniform(-1.0, 1.0, size=(size, n))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    X = X + noise * rng.standard_normal((size, n))
    meta = {"generator": "xor-grid", "seed": int(seed), "noise": float(noise)}
    return Dataset(X, y, 2, meta)


GENERATORS = {
    "gaussian-blobs": make_gaussian_blobs,
    "concentric-rings": make_concentric_rings,
    "xor-grid": make_xor_grid,
}


def generate(generator: str, n: int, n_classes: int, size: int, noise: float, seed: int) -> Dataset:
    """Dispatch to a named generator; unknown names raise ValueError."""
    try:
        fn = GENERATORS[generator]
    except KeyError:
        raise ValueError(
            f"unknown generator {generator!r}; choose from {sorted(GENERATORS)}"
        ) from None
    return fn(n, n_classes, size, noise, seed)


def split_dataset(dataset: Dataset, head_size: int) -> tuple[Dataset, Dataset]:
    """Split rows into a head (train) part and the tail (held-out) part.

    Both parts share the generating distribution, unlike two generator
    calls with different seeds, which would redraw the class structure.
    """
    total = dataset.X.shape[0]
    if not 0 < head_size < total:
        raise ValueError(f"head_size must lie strictly between 0 and {total}, got {head_size}")
    parts = []
    for lo, hi, role in ((0, head_size, "head"), (head_size, total, "tail")):
        meta = dict(dataset.metadata)
        meta.update(split=role, split_head=head_size, split_total=total)
        parts.append(Dataset(dataset.X[lo:hi], dataset.y[lo:hi], dataset.n_classes, meta))
    return parts[0], parts[1]


def sidecar_path(path) -> Path:
    """The JSON metadata path paired with a dataset CSV path."""
    return Path(path).with_suffix(".json")


def save_dataset(dataset: Dataset, path) -> None:
    """Write headerless CSV rows (features then label) plus the JSON sidecar.

    Floats are written with shortest round-trip precision, so identical
    datasets produce byte-identical files.
    """
    path = Path(path)
    lines = []
    for row, label in zip(dataset.X, dataset.y):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(label)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {
        "format_version": DATASET_FORMAT_VERSION,
        "n": dataset.n_features,
        "classes": int(dataset.n_classes),
        "size": int(dataset.X.shape[0]),
    }
    meta.update(dataset.metadata)
    sidecar_path(path).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_dataset(path) -> Dataset:
    """Read a dataset CSV and its sidecar (the sidecar is optional)."""
    path = Path(path)
    X_rows, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise ValueError(f"{path}:{line_no}: expected features and a label")
            try:
                X_rows.append([float(v) for v in parts[:-1]])
                labels.append(int(parts[-1]))
            except ValueError as e:
                raise ValueError(f"{path}:{line_no}: {e}") from None
    if not X_rows:
        raise ValueError(f"{path}: dataset file is empty")
    widths = {len(r) for r in X_rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: inconsistent row widths {sorted(widths)}")
    X = np.asarray(X_rows, dtype=float)
    y = np.asarray(labels, dtype=int)
    meta_path = sidecar_path(path)
    metadata = {}
    n_classes = int(y.max()) + 1
    if meta_path.exists():
        metadata = json.loads(meta_path.read_text(encoding="utf-8"))
        n_classes = int(metadata.get("classes", n_classes))
        if metadata.get("n") not in (None, X.shape[1]):
            raise ValueError(
                f"{path}: sidecar says n={metadata['n']} but rows have {X.shape[1]} features"
            )
    return Dataset(X, y, n_classes, metadata)
