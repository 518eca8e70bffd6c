"""Two-level Gaussian mixture datasets and their binary file format.

Classes are subclasses of a few superclasses: subclasses of one superclass
sit within ``sub_scale`` of its centroid and are hard negatives of each
other.

File layout (little-endian)::

    b"APIDS1\\n" | u32 version=1 | u32 d_in | u32 n_classes | u32 n_train | u32 n_test
    then n_train + n_test records of  u32 label | u8 split (0 train, 1 test) | d_in x f32

Samples are rounded to float32 at generation time so a write/read round
trip is bit-exact; arithmetic stays float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError

MAGIC = b"APIDS1\n"
VERSION = 1
_HEADER = np.dtype([("version", "<u4"), ("d_in", "<u4"), ("n_classes", "<u4"),
                    ("n_train", "<u4"), ("n_test", "<u4")])
TRAIN, TEST = 0, 1


@dataclass(frozen=True)
class SynthSpec:
    n_super: int = 8
    n_sub: int = 3
    d_in: int = 16
    n_train: int = 20
    n_test: int = 20
    super_scale: float = 1.0
    sub_scale: float = 0.1
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("n_super", "n_sub", "d_in", "n_train", "n_test"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.sub_scale < self.super_scale:
            raise ConfigError(f"need 0 <= sub_scale < super_scale, got {self.sub_scale} and {self.super_scale}")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")

    @property
    def n_classes(self) -> int:
        return self.n_super * self.n_sub


def _f32(a):
    return np.asarray(a, dtype=np.float32).astype(np.float64)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    split: np.ndarray
    n_classes: int
    provenance: object = None
    centroids: np.ndarray | None = field(default=None, repr=False)

    @property
    def d_in(self) -> int:
        return self.X.shape[1]

    def part(self, which: int):
        mask = self.split == which
        return self.X[mask], self.y[mask]

    @property
    def train(self):
        return self.part(TRAIN)

    @property
    def test(self):
        return self.part(TEST)

    def same_data(self, other: "Dataset") -> bool:
        """Bitwise equality of samples, labels, split tags and class count."""
        return (self.n_classes == other.n_classes
                and self.X.shape == other.X.shape
                and self.X.tobytes() == other.X.tobytes()
                and np.array_equal(self.y, other.y)
                and np.array_equal(self.split, other.split))


def generate(spec: SynthSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    supers = rng.normal(0.0, spec.super_scale, size=(spec.n_super, spec.d_in))
    offsets = rng.normal(size=(spec.n_super, spec.n_sub, spec.d_in))
    offsets *= spec.sub_scale / np.linalg.norm(offsets, axis=-1, keepdims=True)
    centroids = _f32((supers[:, None, :] + offsets).reshape(-1, spec.d_in))

    X, y, split = [], [], []
    for which, count in ((TRAIN, spec.n_train), (TEST, spec.n_test)):
        for c in range(spec.n_classes):
            noise = rng.normal(0.0, spec.noise_sigma, size=(count, spec.d_in)) if spec.noise_sigma else 0.0
            X.append(_f32(np.broadcast_to(centroids[c] + noise, (count, spec.d_in))))
            y.append(np.full(count, c))
            split.append(np.full(count, which, dtype=np.uint8))
    return Dataset(np.concatenate(X), np.concatenate(y).astype(np.int64), np.concatenate(split),
                   spec.n_classes, spec, centroids)


def nearest_centroid_accuracy(dataset: Dataset) -> float:
    """Test accuracy of the train-mean nearest-centroid rule."""
    Xtr, ytr = dataset.train
    Xte, yte = dataset.test
    means = np.stack([Xtr[ytr == c].mean(axis=0) for c in range(dataset.n_classes)])
    d = ((Xte[:, None, :] - means[None]) ** 2).sum(-1)
    return float(np.mean(d.argmin(axis=1) == yte))


def _record_dtype(d_in):
    return np.dtype([("label", "<u4"), ("split", "u1"), ("x", "<f4", (d_in,))])


def write_dataset(path, dataset: Dataset) -> None:
    X = np.asarray(dataset.X)
    if not np.array_equal(X.astype(np.float32).astype(np.float64), X):
        raise ValueError("samples are not float32-representable; round-trip would not be exact")
    n_train = int(np.count_nonzero(dataset.split == TRAIN))
    header = np.array([(VERSION, X.shape[1], dataset.n_classes, n_train, X.shape[0] - n_train)], dtype=_HEADER)
    rec = np.empty(X.shape[0], dtype=_record_dtype(X.shape[1]))
    rec["label"] = dataset.y
    rec["split"] = dataset.split
    rec["x"] = X
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(header.tobytes())
        f.write(rec.tobytes())


def read_dataset(path) -> Dataset:
    buf = Path(path).read_bytes()
    if buf[:len(MAGIC)] != MAGIC:
        bad = next((i for i, (a, b) in enumerate(zip(buf, MAGIC)) if a != b), min(len(buf), len(MAGIC)))
        raise FormatError("bad magic", bad)
    pos = len(MAGIC)
    if len(buf) < pos + _HEADER.itemsize:
        raise FormatError("truncated header", len(buf))
    h = np.frombuffer(buf, dtype=_HEADER, count=1, offset=pos)[0]
    if h["version"] != VERSION:
        raise FormatError(f"unsupported version {int(h['version'])}", pos)
    d_in, n_classes = int(h["d_in"]), int(h["n_classes"])
    n_train, n_test = int(h["n_train"]), int(h["n_test"])
    pos += _HEADER.itemsize
    rd = _record_dtype(d_in)
    n = n_train + n_test
    if len(buf) - pos != n * rd.itemsize:
        got = (len(buf) - pos) // rd.itemsize if rd.itemsize else 0
        raise FormatError(f"count mismatch: header declares {n} records, file holds {got}",
                          pos + min(n, got) * rd.itemsize)
    rec = np.frombuffer(buf, dtype=rd, count=n, offset=pos)
    for i in range(n):
        if rec["label"][i] >= n_classes or rec["split"][i] > 1:
            what = "label" if rec["label"][i] >= n_classes else "split tag"
            raise FormatError(f"bad {what} in record {i}", pos + i * rd.itemsize)
    split = rec["split"].copy()
    labels = rec["label"].astype(np.int64)
    if int(np.count_nonzero(split == TRAIN)) != n_train:
        raise FormatError(f"count mismatch: {np.count_nonzero(split == TRAIN)} train records, header says {n_train}", pos)
    for which, tag in ((TRAIN, "train"), (TEST, "test")):
        present = np.bincount(labels[split == which], minlength=n_classes)
        empty = np.flatnonzero(present == 0)
        if empty.size:
            raise FormatError(f"count mismatch: class {int(empty[0])} has no {tag} records", pos)
    return Dataset(rec["x"].astype(np.float64), labels, split, n_classes, str(path))
