"""Scalar statistics of wavelet coefficient vectors and the per-sample feature matrix."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from coalsel.wavelet import DEFAULT_DEPTH, Signal, WaveletFilter, dwt_multilevel

DEFAULT_CATALOG = (
    "mean",
    "std",
    "skewness",
    "kurtosis",
    "min",
    "max",
    "median",
    "rms",
    "entropy",
    "zcr",
)
EXTENDED_CATALOG = DEFAULT_CATALOG + (
    "iqr",
    "mad",
    "p05",
    "p95",
    "energy",
    "logenergy",
    "linelength",
    "range",
    "p25",
    "p75",
)
CATALOGS = {"default": DEFAULT_CATALOG, "extended": EXTENDED_CATALOG}
ENTROPY_BINS = 16

_NAME_RE = re.compile(r"^(?P<channel>[A-Za-z0-9]+)_L(?P<level>\d+)_(?P<stat>[a-z0-9]+)$")


def resolve_catalog(catalog) -> tuple:
    if isinstance(catalog, str):
        try:
            return CATALOGS[catalog]
        except KeyError:
            raise ValueError(f"unknown catalog {catalog!r}; expected one of {sorted(CATALOGS)}")
    catalog = tuple(catalog)
    unknown = [s for s in catalog if s not in EXTENDED_CATALOG]
    if unknown:
        raise ValueError(f"unknown statistics {unknown}")
    return catalog


def _central_moments(x):
    if x.max() == x.min():
        return 0.0, 0.0, 0.0
    c = x - x.mean()
    # skewness and kurtosis are scale-free; normalizing keeps tiny spreads from underflowing
    top = np.max(np.abs(c))
    if top == 0.0:
        return 0.0, 0.0, 0.0
    c = c / top
    return np.mean(c * c), np.mean(c**3), np.mean(c**4)


def skewness(x) -> float:
    """Population (biased) skewness; 0 for a constant vector."""
    m2, m3, _ = _central_moments(np.asarray(x, dtype=np.float64))
    return 0.0 if m2 == 0.0 else float(m3 / m2**1.5)


def excess_kurtosis(x) -> float:
    """Population excess kurtosis; 0 for a constant vector."""
    m2, _, m4 = _central_moments(np.asarray(x, dtype=np.float64))
    return 0.0 if m2 == 0.0 else float(m4 / (m2 * m2) - 3.0)


def shannon_entropy(x, bins: int = ENTROPY_BINS, method: str = "histogram") -> float:
    """Entropy in bits of the coefficient magnitudes.

    ``histogram``: ``bins`` equal-width bins over ``[min|x|, max|x|]``; an
    all-equal vector occupies one bin and scores 0.
    ``magnitude``: the distribution ``|x_k| / sum|x|`` over the points
    themselves; ``[1, 1, 1, 1]`` scores 2.
    ``0 log 0`` is taken as 0 in both.
    """
    a = np.abs(np.asarray(x, dtype=np.float64))
    if method == "histogram":
        lo, hi = a.min(), a.max()
        if hi == lo:
            return 0.0
        # points within rounding of an edge go to the upper bin, so rescaling
        # the vector cannot move them
        t = (a - lo) / (hi - lo) * bins
        idx = np.minimum(np.floor(t + 1e-9).astype(np.int64), bins - 1)
        p = np.bincount(idx, minlength=bins) / a.size
    elif method == "magnitude":
        total = a.sum()
        if total == 0.0:
            return 0.0
        p = a / total
    else:
        raise ValueError(f"unknown entropy method {method!r}")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)) + 0.0)


def zero_crossing_rate(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return 0.0
    # compare signs, not products: the product of two tiny values can underflow to 0
    s = np.sign(x)
    return float(np.count_nonzero(s[:-1] * s[1:] < 0) / (x.size - 1))


def log_energy_entropy(x) -> float:
    sq = np.square(np.asarray(x, dtype=np.float64))
    sq = sq[sq > 0]
    return float(np.sum(np.log(sq))) if sq.size else 0.0


_STATS = {
    "mean": lambda x: float(np.mean(x)),
    "std": lambda x: float(np.std(x)),
    "skewness": skewness,
    "kurtosis": excess_kurtosis,
    "min": lambda x: float(np.min(x)),
    "max": lambda x: float(np.max(x)),
    "median": lambda x: float(np.median(x)),
    "rms": lambda x: float(np.sqrt(np.mean(x * x))),
    "entropy": shannon_entropy,
    "zcr": zero_crossing_rate,
    "iqr": lambda x: float(np.subtract(*np.percentile(x, [75, 25]))),
    "mad": lambda x: float(np.mean(np.abs(x - np.mean(x)))),
    "p05": lambda x: float(np.percentile(x, 5)),
    "p95": lambda x: float(np.percentile(x, 95)),
    "energy": lambda x: float(np.sum(x * x)),
    "logenergy": log_energy_entropy,
    "linelength": lambda x: float(np.sum(np.abs(np.diff(x)))),
    "range": lambda x: float(np.ptp(x)),
    "p25": lambda x: float(np.percentile(x, 25)),
    "p75": lambda x: float(np.percentile(x, 75)),
}


def extract_features(coeffs, catalog=DEFAULT_CATALOG) -> dict:
    """Map each statistic in ``catalog`` to its value on ``coeffs``."""
    x = np.asarray(coeffs, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("coefficient vector must be non-empty and 1-D")
    if not np.all(np.isfinite(x)):
        raise ValueError("coefficient vector contains non-finite values")
    return {name: _STATS[name](x) for name in resolve_catalog(catalog)}


@dataclass(frozen=True)
class FeatureDescriptor:
    channel: str
    level: int
    statname: str

    @property
    def name(self) -> str:
        return f"{self.channel}_L{self.level}_{self.statname}"

    @classmethod
    def from_name(cls, name: str) -> "FeatureDescriptor":
        m = _NAME_RE.match(name)
        if m is None:
            raise ValueError(f"malformed feature name {name!r}")
        return cls(m["channel"], int(m["level"]), m["stat"])


@dataclass
class FeatureMatrix:
    descriptors: list
    rows: np.ndarray
    labels: np.ndarray
    ids: list | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64).reshape(len(self.labels), -1)
        self.labels = np.asarray(self.labels, dtype=str)
        if self.rows.shape[1] != len(self.descriptors):
            raise ValueError(
                f"{self.rows.shape[1]} columns but {len(self.descriptors)} descriptors"
            )
        names = self.names
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("feature matrix contains non-finite entries")

    @property
    def names(self) -> list:
        return [d.name for d in self.descriptors]

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def select(self, columns: Sequence[int]) -> "FeatureMatrix":
        columns = list(columns)
        return FeatureMatrix(
            [self.descriptors[c] for c in columns], self.rows[:, columns], self.labels, self.ids
        )

    def to_csv_stream(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow([*self.names, "label"])
        for row, label in zip(self.rows, self.labels):
            writer.writerow([*(repr(float(v)) for v in row), label])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.to_csv_stream(fh)

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[-1] != "label":
                raise ValueError(f"{path}: last column must be 'label'")
            body = list(reader)
        descriptors = [FeatureDescriptor.from_name(n) for n in header[:-1]]
        rows = np.array([[float(v) for v in r[:-1]] for r in body], dtype=np.float64)
        labels = [r[-1] for r in body]
        return cls(descriptors, rows.reshape(len(body), len(descriptors)), labels)


def _record_parts(record):
    if hasattr(record, "channels"):
        return getattr(record, "id", None), record.channels, record.label
    channels, label = record
    return None, channels, label


def feature_descriptors(channels: Iterable[str], depth: int, catalog=DEFAULT_CATALOG) -> list:
    catalog = resolve_catalog(catalog)
    return [
        FeatureDescriptor(ch, level, stat)
        for ch in channels
        for level in range(1, depth + 1)
        for stat in catalog
    ]


def record_features(
    channels: Mapping[str, Signal | np.ndarray],
    channel_order: Sequence[str],
    filter_map: Mapping[str, WaveletFilter],
    depth: int,
    catalog,
    boundary: str = "periodic",
) -> np.ndarray:
    """One feature row: detail levels 1..depth of each channel; approximation dropped."""
    values = []
    for ch in channel_order:
        decomp = dwt_multilevel(channels[ch], filter_map[ch], depth, boundary)
        for d in decomp.details:
            stats = extract_features(d, catalog)
            values.extend(stats[s] for s in catalog)
    return np.array(values, dtype=np.float64)


def build_feature_matrix(
    records,
    filter_map: Mapping[str, WaveletFilter],
    depth: int = DEFAULT_DEPTH,
    catalog=DEFAULT_CATALOG,
    boundary: str = "periodic",
    channels: Sequence[str] | None = None,
) -> FeatureMatrix:
    """Assemble the feature matrix of ``records``.

    ``records`` holds objects with ``channels``/``label`` (and optionally ``id``)
    attributes, or ``(channels, label)`` pairs. Columns are ordered by channel,
    then level, then catalog entry.
    """
    catalog = resolve_catalog(catalog)
    records = list(records)
    if channels is None:
        channels = list(_record_parts(records[0])[1]) if records else list(filter_map)
    channels = list(channels)
    missing = [ch for ch in channels if ch not in filter_map]
    if missing:
        raise ValueError(f"no wavelet filter configured for channels {missing}")
    expected = set(channels)
    rows, labels, ids = [], [], []
    for pos, record in enumerate(records):
        rid, chans, label = _record_parts(record)
        if set(chans) != expected:
            who = rid if rid is not None else f"#{pos}"
            raise ValueError(
                f"record {who} has channels {sorted(chans)}, expected {sorted(expected)}"
            )
        rows.append(record_features(chans, channels, filter_map, depth, catalog, boundary))
        labels.append(label)
        ids.append(rid if rid is not None else str(pos))
    descriptors = feature_descriptors(channels, depth, catalog)
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(descriptors))
    return FeatureMatrix(descriptors, matrix, labels, ids)

