"""Synthetic drifting streams, delimited-file ingestion, causal standardization
and feature-noise injection.

Every generator is a plain iterator of :class:`StreamExample` and is a pure
function of its configuration (seeded ``numpy.random.Generator``).
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class StreamExample:
    x: np.ndarray
    y: int
    index: int


@dataclass
class SeaConfig:
    thresholds: list = field(default_factory=lambda: [4.0, 7.0, 4.0, 7.0])
    segment_length: int = 12_500
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.thresholds:
            raise ValueError("SEA needs at least one threshold")
        if self.segment_length < 1:
            raise ValueError("segment_length must be >= 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise is a probability")

    @property
    def n(self):
        return self.segment_length * len(self.thresholds)


@dataclass
class HyperplaneConfig:
    d: int = 10
    drift_magnitude: float = 0.001
    n: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("hyperplane dimension must be >= 2")
        if self.drift_magnitude < 0:
            raise ValueError("drift_magnitude must be >= 0")


def sea_label(f1, f2, q):
    return int(f1 + f2 < q)


def sea_generate(cfg):
    rng = np.random.default_rng(cfg.seed)
    i = 0
    for q in cfg.thresholds:
        X = rng.uniform(0.0, 10.0, size=(cfg.segment_length, 3))
        flips = rng.random(cfg.segment_length) < cfg.noise
        for x, flip in zip(X, flips):
            y = sea_label(x[0], x[1], q)
            if flip:
                y = 1 - y
            yield StreamExample(x, y, i)
            i += 1


def hyperplane_generate(cfg):
    """Gradually rotating hyperplane on [0, 1]^d.

    Label 1 iff w.x > sum(w)/2; after every example each weight takes a
    zero-mean Gaussian step of scale ``drift_magnitude``.
    """
    rng = np.random.default_rng(cfg.seed)
    w = rng.uniform(0.0, 1.0, size=cfg.d)
    for i in range(cfg.n):
        x = rng.uniform(0.0, 1.0, size=cfg.d)
        y = int(w @ x > w.sum() / 2.0)
        yield StreamExample(x, y, i)
        if cfg.drift_magnitude:
            w = w + rng.normal(0.0, cfg.drift_magnitude, size=cfg.d)


class StreamFormatError(ValueError):
    pass


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_delimited(path, label_column=-1, delimiter=",", header=None, label_map=None):
    """Stream rows of a delimited file.

    Labels become 0-based indices in order of first appearance (``label_map``
    may be passed in to share or inspect the mapping). ``header=None`` skips the
    first row only when one of its feature fields is non-numeric.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such data file: {path}")
    labels = {} if label_map is None else label_map
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        width = None
        i = 0
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
                col = label_column % width
                feats = [c for j, c in enumerate(row) if j != col]
                skip = header if header is not None else not all(_is_number(c) for c in feats)
                if skip:
                    continue
            if len(row) != width:
                raise StreamFormatError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            try:
                x = np.array([float(c) for j, c in enumerate(row) if j != col])
            except ValueError as exc:
                raise StreamFormatError(f"{path}:{lineno}: non-numeric feature ({exc})") from None
            key = row[col].strip()
            if key not in labels:
                labels[key] = len(labels)
            yield StreamExample(x, labels[key], i)
            i += 1


def write_delimited(stream, path, delimiter=","):
    """Materialize a stream as rows of features followed by the label."""
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        for ex in stream:
            w.writerow([repr(float(v)) for v in ex.x] + [ex.y])
            n += 1
    return n


class OnlineStandardizer:
    """Running per-feature mean/variance (Welford), updated one example at a time."""

    def __init__(self, var_floor=1e-8):
        self.var_floor = var_floor
        self.count = 0
        self.mean = None
        self.m2 = None

    def update(self, x):
        if self.mean is None:
            self.mean = np.zeros_like(x, dtype=float)
            self.m2 = np.zeros_like(x, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    @property
    def variance(self):
        return self.m2 / self.count

    def transform(self, x):
        return (x - self.mean) / np.sqrt(np.maximum(self.variance, self.var_floor))


def standardize(example, standardizer):
    """z-score an example using statistics of everything seen so far, itself included."""
    standardizer.update(example.x)
    return StreamExample(standardizer.transform(example.x), example.y, example.index)


def standardized(stream, standardizer=None):
    standardizer = standardizer or OnlineStandardizer()
    for ex in stream:
        yield standardize(ex, standardizer)


def inject_noise(stream, fraction, variance, seed):
    """Add N(0, variance) feature noise to a random ``fraction`` of examples."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    sd = np.sqrt(variance)
    for ex in stream:
        hit = rng.random() < fraction
        noise = rng.normal(0.0, sd, size=ex.x.shape)
        if hit and variance > 0:
            yield StreamExample(ex.x + noise, ex.y, ex.index)
        else:
            yield ex


class OnlineMinMaxScaler:
    """Causal min-max scaling onto [0, 1] using the range seen so far."""

    def __init__(self, range_floor=1e-8):
        self.range_floor = range_floor
        self.lo = None
        self.hi = None

    def update(self, x):
        if self.lo is None:
            self.lo = np.array(x, dtype=float)
            self.hi = np.array(x, dtype=float)
        else:
            self.lo = np.minimum(self.lo, x)
            self.hi = np.maximum(self.hi, x)

    def transform(self, x):
        return (x - self.lo) / np.maximum(self.hi - self.lo, self.range_floor)


def minmax_scaled(stream, scaler=None):
    scaler = scaler or OnlineMinMaxScaler()
    for ex in stream:
        scaler.update(ex.x)
        yield StreamExample(scaler.transform(ex.x), ex.y, ex.index)
