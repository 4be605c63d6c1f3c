"""Labeled multi-channel records: on-disk layout, fold plans and a synthetic generator.

On-disk layout::

    <root>/manifest.json
    <root>/<record-id>/<channel>.csv      # single column "value"

``manifest.json`` is ``{"channels": [...], "sample_rate": float,
"records": [{"id": str, "label": "true" | "false" | "unknown"}]}``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from coalsel.wavelet import (
    Signal,
    WaveletDecomposition,
    get_filter,
    idwt_multilevel,
    min_length,
)

log = logging.getLogger(__name__)

LABELS = ("false", "true")
UNKNOWN_LABEL = "unknown"
DEFAULT_FILTERS = {"ECG": "db8", "PLETH": "db4", "ABP": "db4"}
FALLBACK_FILTER = "db4"


def make_rng(seed: int) -> np.random.Generator:
    """The package's seeded generator (numpy PCG64)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def filter_names_for(channels: Sequence[str], overrides: Mapping[str, str] | None = None) -> dict:
    names = {ch: DEFAULT_FILTERS.get(ch, FALLBACK_FILTER) for ch in channels}
    if overrides:
        names.update({ch: v for ch, v in overrides.items() if ch in names})
    return names


@dataclass(frozen=True)
class Record:
    id: str
    channels: Mapping[str, Signal]
    label: str


@dataclass(frozen=True)
class Manifest:
    channels: tuple
    sample_rate: float
    records: tuple  # of (id, label)

    @classmethod
    def load(cls, path) -> "Manifest":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        try:
            channels = tuple(raw["channels"])
            rate = float(raw["sample_rate"])
            records = tuple((str(r["id"]), str(r["label"])) for r in raw["records"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{path}: malformed manifest ({exc})") from exc
        if not channels:
            raise ValueError(f"{path}: manifest declares no channels")
        return cls(channels, rate, records)

    def to_json(self) -> str:
        body = {
            "channels": list(self.channels),
            "sample_rate": self.sample_rate,
            "records": [{"id": rid, "label": label} for rid, label in self.records],
        }
        return json.dumps(body, indent=2) + "\n"


def _read_channel(path: Path, record_id: str, channel: str) -> np.ndarray:
    if not path.is_file():
        raise ValueError(f"record {record_id}: missing channel {channel} ({path})")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["value"]:
            raise ValueError(f"record {record_id}: {path.name} must have the single column 'value'")
        values = []
        for i, row in enumerate(reader):
            try:
                v = float(row[0])
            except (IndexError, ValueError):
                raise ValueError(
                    f"record {record_id}: channel {channel} sample {i} is not a number"
                ) from None
            if not math.isfinite(v):
                raise ValueError(f"record {record_id}: channel {channel} sample {i} is non-finite")
            values.append(v)
    if not values:
        raise ValueError(f"record {record_id}: channel {channel} has no samples")
    return np.array(values, dtype=np.float64)


def load_records(path, manifest: Manifest | None = None) -> list:
    """Read and validate every labeled record under ``path``.

    Records labeled ``unknown`` are skipped with a warning.
    """
    root = Path(path)
    if manifest is None:
        manifest = Manifest.load(root / "manifest.json")
    records = []
    skipped = 0
    for pos, (rid, label) in enumerate(manifest.records):
        if label == UNKNOWN_LABEL:
            skipped += 1
            continue
        if label not in LABELS:
            raise ValueError(
                f"record {rid} (position {pos}): unknown label {label!r}; expected one of "
                f"{[*LABELS, UNKNOWN_LABEL]}"
            )
        channels = {
            ch: Signal(ch, _read_channel(root / rid / f"{ch}.csv", rid, ch), manifest.sample_rate)
            for ch in manifest.channels
        }
        records.append(Record(rid, channels, label))
    if skipped:
        log.warning("skipped %d record(s) labeled %r", skipped, UNKNOWN_LABEL)
    return records


def write_records(records: Sequence[Record], path, sample_rate: float | None = None) -> Path:
    """Write ``records`` in the on-disk layout; floats use round-trip ``repr``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    channels = tuple(records[0].channels) if records else ()
    if sample_rate is None:
        sample_rate = next(iter(records[0].channels.values())).sample_rate if records else 1.0
    for rec in records:
        if tuple(rec.channels) != channels:
            raise ValueError(f"record {rec.id} has channels {list(rec.channels)}, expected {list(channels)}")
        rdir = root / rec.id
        rdir.mkdir(exist_ok=True)
        for ch, sig in rec.channels.items():
            lines = ["value"] + [repr(float(v)) for v in sig.samples]
            (rdir / f"{ch}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest = Manifest(channels, float(sample_rate), tuple((r.id, r.label) for r in records))
    (root / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return root


@dataclass(frozen=True)
class SplitPlan:
    fold_assignments: np.ndarray
    k: int
    seed: int

    def fold(self, i: int) -> tuple:
        """``(train_indices, test_indices)`` of fold ``i``."""
        test = self.fold_assignments == i
        return np.flatnonzero(~test), np.flatnonzero(test)


def stratified_kfold(labels, k: int, seed: int) -> SplitPlan:
    """Shuffle each class and deal its members round-robin over the folds.

    The dealing position carries over from one class to the next so fold
    sizes stay within one of each other.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = make_rng(seed)
    folds = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for cls in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == cls)
        if members.size < k:
            raise ValueError(f"class {cls!r} has {members.size} members, fewer than k={k}")
        members = rng.permutation(members)
        folds[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    folds.setflags(write=False)
    return SplitPlan(folds, k, int(seed))


def parse_component(text) -> tuple:
    """``"ECG:L2"`` (or ``("ECG", 2)``) -> ``("ECG", 2)``."""
    if isinstance(text, (tuple, list)):
        ch, level = text
        return str(ch), int(level)
    ch, _, level = str(text).partition(":")
    if not level.upper().startswith("L") or not level[1:].isdigit():
        raise ValueError(f"malformed component {text!r}; expected '<channel>:L<level>'")
    return ch, int(level[1:])


@dataclass
class SyntheticSpec:
    """Generator description.

    Each record's wavelet coefficients are drawn level by level and then
    synthesized into signals, so the decomposition in the feature pipeline
    recovers them exactly.

    ``coalitions`` lists XOR-planted groups of ``"<channel>:L<level>"``
    components. Each component carries a hidden bit that shifts the mean of its
    detail coefficients up or down; the bits of every group have parity equal
    to the label, so no single component says anything about the label.
    ``marginal`` components have their mean shifted by the label directly.
    ``decoys`` share one per-record shift ``t``: ``+-decoy_shift`` with a random
    sign for ``true`` records, ``N(0, decoy_shift**2)`` for ``false`` ones. Their
    class-conditional means and covariances coincide, so a Gaussian classifier
    gains nothing from them, while their marginal distributions differ.
    Shifts are in units of the standard error of the level mean.
    """

    n_samples: int = 200
    channels: list = field(default_factory=lambda: ["ECG", "PLETH", "ABP"])
    signal_length: int = 256
    depth: int = 6
    sample_rate: float = 125.0
    filters: dict = field(default_factory=dict)
    coalitions: list = field(default_factory=list)
    coalition_shift: float = 6.0
    marginal: list = field(default_factory=list)
    marginal_shift: float = 0.5
    decoys: list = field(default_factory=list)
    decoy_shift: float = 4.0
    jitter: float = 0.25

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SyntheticSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown synthetic spec fields {sorted(extra)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return asdict(self)

    def components(self) -> list:
        return [(ch, lv) for ch in self.channels for lv in range(1, self.depth + 1)]

    def validate(self) -> None:
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if not self.channels:
            raise ValueError("at least one channel is required")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        available = set(self.components())
        for name, filt in filter_names_for(self.channels, self.filters).items():
            need = min_length(get_filter(filt), self.depth)
            if self.signal_length < need:
                raise ValueError(f"signal_length {self.signal_length} < {need} required by {name}/{filt}")
        if self.signal_length % 2**self.depth:
            raise ValueError(f"signal_length must be divisible by 2**depth = {2**self.depth}")
        used = set()
        for group in self.coalitions:
            comps = [parse_component(c) for c in group]
            if len(comps) < 2:
                raise ValueError(f"coalition {group} needs at least 2 components")
            if len(comps) > len(available):
                raise ValueError(
                    f"coalition of size {len(comps)} exceeds the {len(available)} available components"
                )
            for comp in comps:
                if comp not in available:
                    raise ValueError(f"component {comp} is not among channels x levels 1..{self.depth}")
                if comp in used:
                    raise ValueError(f"component {comp} is planted twice")
                used.add(comp)
        for c in [*self.marginal, *self.decoys]:
            comp = parse_component(c)
            if comp not in available:
                raise ValueError(f"component {comp} is not among channels x levels 1..{self.depth}")
            if comp in used:
                raise ValueError(f"component {comp} is planted twice")
            used.add(comp)


# XOR pair among 40 features (2 channels x 2 levels x 10 statistics) with
# Gaussian-invisible decoys on the remaining two components. Shift sizes come
# from benchmarks/calibrate_planted.py and are frozen.
PLANTED_XOR_BENCHMARK = {
    "n_samples": 500,
    "channels": ["ECG", "PLETH"],
    "signal_length": 256,
    "depth": 2,
    "coalitions": [["ECG:L1", "PLETH:L1"]],
    "coalition_shift": 6.0,
    "decoys": ["ECG:L2", "PLETH:L2"],
    "decoy_shift": 6.0,
}


def planted_features(spec: SyntheticSpec, statname: str = "mean") -> list:
    """Feature names that carry the planted coalition bits."""
    return [
        f"{ch}_L{lv}_{statname}"
        for group in spec.coalitions
        for ch, lv in map(parse_component, group)
    ]


def generate_synthetic(spec: SyntheticSpec, seed: int) -> list:
    """Deterministic list of :class:`Record` following ``spec``."""
    spec.validate()
    rng = make_rng(seed)
    n, J, N = spec.n_samples, spec.depth, spec.signal_length
    y = np.zeros(n, dtype=np.int64)
    y[rng.permutation(n)[: n // 2]] = 1
    if n % 2:
        y[rng.permutation(np.flatnonzero(y == 0))[0]] = int(rng.integers(2))
    sign_y = 2.0 * y - 1.0

    shifts = {}
    for group in spec.coalitions:
        comps = [parse_component(c) for c in group]
        bits = rng.integers(0, 2, size=(n, len(comps)))
        bits[:, -1] = (y + bits[:, :-1].sum(axis=1)) % 2
        for j, comp in enumerate(comps):
            shifts[comp] = spec.coalition_shift * (2.0 * bits[:, j] - 1.0)
    for c in spec.marginal:
        shifts[parse_component(c)] = spec.marginal_shift * sign_y
    if spec.decoys:
        t = np.where(
            y == 1,
            spec.decoy_shift * (2.0 * rng.integers(0, 2, size=n) - 1.0),
            spec.decoy_shift * rng.standard_normal(n),
        )
        for c in spec.decoys:
            shifts[parse_component(c)] = t

    filters = {ch: get_filter(f) for ch, f in filter_names_for(spec.channels, spec.filters).items()}
    lengths = tuple(N // 2**j for j in range(J))
    records = []
    for r in range(n):
        channels = {}
        for ci, ch in enumerate(spec.channels):
            gain = math.exp(spec.jitter * rng.standard_normal())
            details = []
            for level in range(1, J + 1):
                m = N // 2**level
                scale = gain * 2.0 ** (level / 2.0)
                d = scale * rng.standard_normal(m)
                shift = shifts.get((ch, level))
                if shift is not None:
                    d += shift[r] * scale / math.sqrt(m)
                details.append(d)
            approx = gain * (2.0 ** ((J + 2) / 2.0)) * (1.0 + ci + rng.standard_normal(N // 2**J))
            decomp = WaveletDecomposition(tuple(details), approx, filters[ch].name, "periodic", lengths)
            channels[ch] = Signal(ch, idwt_multilevel(decomp, filters[ch]), spec.sample_rate)
        records.append(Record(f"rec{r:05d}", channels, LABELS[y[r]]))
    return records
