"""Run configuration and the pipeline stages behind the command-line tool."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from coalsel import __version__, baselines
from coalsel.classifier import CLASSIFIERS, SubsetScorer
from coalsel.dataset import (
    SyntheticSpec,
    filter_names_for,
    generate_synthetic,
    load_records,
    stratified_kfold,
    write_records,
    planted_features,
)
from coalsel.features import build_feature_matrix, resolve_catalog
from coalsel.game import accuracy_game, multi_perturbation_shapley
from coalsel.ranking import RankingReport, rank_features
from coalsel.wavelet import BOUNDARY_MODES, get_filter

SELECTORS = ("shapley-mpe", "chi2", "info-gain", "gain-ratio", "relief")


@dataclass
class RunConfig:
    dataset: str | None = None
    synthetic: dict | None = None
    filters: dict = field(default_factory=dict)
    depth: int = 6
    boundary: str = "periodic"
    catalog: str = "default"
    selectors: list = field(default_factory=lambda: list(SELECTORS))
    L: int = 4
    rounds: int = 100
    seed: int = 0
    folds: int = 5
    top_k: int = 30
    bins: int = 10
    relief_k: int = 10
    relief_m: int | None = None
    classifier: str = "gaussian-full"
    include_none: bool = True
    n_jobs: int = 1
    output: str = "run"

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown config fields {sorted(extra)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def validate(self) -> None:
        if (self.dataset is None) == (self.synthetic is None):
            raise ValueError("exactly one of 'dataset' and 'synthetic' must be given")
        unknown = [s for s in self.selectors if s not in SELECTORS]
        if unknown:
            raise ValueError(f"unknown selectors {unknown}; expected a subset of {list(SELECTORS)}")
        if not self.selectors:
            raise ValueError("at least one selector is required")
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {CLASSIFIERS}")
        resolve_catalog(self.catalog)
        for name in self.filters.values():
            get_filter(name)
        if self.top_k < 1 or self.depth < 1 or self.rounds < 1 or self.folds < 2:
            raise ValueError("top_k, depth and rounds must be positive and folds at least 2")

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec.from_dict(self.synthetic)


def atomic_write(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(rows)
    return buf.getvalue()


def load_dataset(cfg: RunConfig) -> list:
    if cfg.dataset is not None:
        return load_records(cfg.dataset)
    return generate_synthetic(cfg.synthetic_spec(), cfg.seed)


def build_matrix(cfg: RunConfig, records):
    channels = list(records[0].channels) if records else []
    filters = {ch: get_filter(n) for ch, n in filter_names_for(channels, cfg.filters).items()}
    return build_feature_matrix(records, filters, cfg.depth, cfg.catalog, cfg.boundary, channels)


def run_selector(name: str, matrix, cfg: RunConfig, plan=None) -> RankingReport:
    if name == "shapley-mpe":
        if plan is None:
            plan = stratified_kfold(matrix.labels, cfg.folds, cfg.seed)
        scorer = SubsetScorer(matrix, plan, cfg.classifier)
        game = accuracy_game(scorer, n_jobs=cfg.n_jobs)
        L = min(cfg.L, matrix.n_features)
        est = multi_perturbation_shapley(game, L, cfg.rounds, cfg.seed)
        return rank_features(est, min(cfg.top_k, matrix.n_features), matrix.names, "shapley-mpe")
    if name == "relief":
        return baselines.relief(matrix, cfg.relief_m, cfg.relief_k, cfg.seed)
    scheme = baselines.DiscretizationScheme.equal_frequency(matrix.rows, cfg.bins)
    fn = {"chi2": baselines.chi_square, "info-gain": baselines.info_gain, "gain-ratio": baselines.gain_ratio}
    return fn[name](matrix, scheme)


def appearance_counts(matrix, reports: dict, top_k: int) -> list:
    """Rows ``[channel, level, count per selector...]`` over the top-``top_k`` features."""
    keys = []
    for d in matrix.descriptors:
        if (d.channel, d.level) not in keys:
            keys.append((d.channel, d.level))
    rows = [["channel", "level", *reports]]
    tallies = {}
    for name, rep in reports.items():
        counts = dict.fromkeys(keys, 0)
        for idx in rep.top(min(top_k, matrix.n_features)):
            d = matrix.descriptors[idx]
            counts[(d.channel, d.level)] += 1
        tallies[name] = counts
    for key in keys:
        rows.append([key[0], key[1], *(tallies[n][key] for n in reports)])
    return rows


def rank_stage(cfg: RunConfig, out: Path, durations: dict):
    t0 = time.perf_counter()
    records = load_dataset(cfg)
    durations["load"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    matrix = build_matrix(cfg, records)
    durations["features"] = time.perf_counter() - t0
    buf = io.StringIO()
    matrix.to_csv_stream(buf)
    atomic_write(out / "features.csv", buf.getvalue())
    plan = stratified_kfold(matrix.labels, cfg.folds, cfg.seed)
    reports, timings = {}, {}
    for name in cfg.selectors:
        t0 = time.perf_counter()
        reports[name] = run_selector(name, matrix, cfg, plan)
        timings[name] = time.perf_counter() - t0
        durations[f"select:{name}"] = timings[name]
        atomic_write(out / f"report_{name}.json", reports[name].to_json())
    atomic_write(out / "appearance.csv", _csv_text(appearance_counts(matrix, reports, cfg.top_k)))
    return matrix, reports, timings


def evaluate_stage(cfg: RunConfig, matrix, reports: dict, timings: dict) -> list:
    """Rows of the comparison table: one per selector plus an all-features row."""
    plan = stratified_kfold(matrix.labels, cfg.folds, cfg.seed + 1)
    scorer = SubsetScorer(matrix, plan, cfg.classifier)
    top_k = min(cfg.top_k, matrix.n_features)
    header = ["selector", "top_k", "cv_accuracy", *(f"recall_{c}" for c in scorer.classes),
              "evaluations", "wall_seconds"]
    rows = [header]
    entries = [(name, rep.top(top_k), rep.evaluations, timings.get(name, 0.0)) for name, rep in reports.items()]
    if cfg.include_none:
        entries.append(("none", list(range(matrix.n_features)), 0, 0.0))
    for name, cols, evals, secs in entries:
        t0 = time.perf_counter()
        res = scorer.evaluate(cols)
        secs += time.perf_counter() - t0
        rows.append([name, len(cols), repr(res.accuracy), *(repr(res.recall[c]) for c in scorer.classes),
                     evals, f"{secs:.6f}"])
    return rows


def write_run_files(cfg: RunConfig, out: Path, durations: dict) -> None:
    atomic_write(out / "config.json", cfg.to_json())
    run = {
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
        "durations": {k: round(v, 6) for k, v in durations.items()},
        "tool_version": __version__,
    }
    atomic_write(out / "run.json", json.dumps(run, indent=2) + "\n")


def run_rank(cfg: RunConfig, out=None):
    out = Path(out or cfg.output)
    durations = {}
    matrix, reports, timings = rank_stage(cfg, out, durations)
    write_run_files(cfg, out, durations)
    return matrix, reports


def run_evaluate(cfg: RunConfig, out=None) -> list:
    out = Path(out or cfg.output)
    durations = {}
    matrix, reports, timings = rank_stage(cfg, out, durations)
    t0 = time.perf_counter()
    rows = evaluate_stage(cfg, matrix, reports, timings)
    durations["evaluate"] = time.perf_counter() - t0
    atomic_write(out / "evaluation.csv", _csv_text(rows))
    write_run_files(cfg, out, durations)
    return rows


def run_synth(cfg: RunConfig, out=None) -> Path:
    if cfg.synthetic is None:
        raise ValueError("config has no 'synthetic' section")
    spec = cfg.synthetic_spec()
    records = generate_synthetic(spec, cfg.seed)
    out = Path(out or cfg.output)
    write_records(records, out, spec.sample_rate)
    meta = {"seed": cfg.seed, "spec": spec.to_dict(), "planted_features": planted_features(spec)}
    atomic_write(out / "generator.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def run_decompose(cfg: RunConfig, record_id: str | None = None, out=None) -> Path:
    """Dump every coefficient of one record (the first one by default)."""
    from coalsel.wavelet import dwt_multilevel

    records = load_dataset(cfg)
    if not records:
        raise ValueError("dataset holds no records")
    if record_id is None:
        rec = records[0]
    else:
        matches = [r for r in records if r.id == record_id]
        if not matches:
            raise ValueError(f"no record with id {record_id!r}")
        rec = matches[0]
    names = filter_names_for(list(rec.channels), cfg.filters)
    rows = [["channel", "band", "level", "index", "value"]]
    for ch, sig in rec.channels.items():
        decomp = dwt_multilevel(sig, get_filter(names[ch]), cfg.depth, cfg.boundary)
        for level, d in enumerate(decomp.details, start=1):
            rows.extend([ch, "detail", level, i, repr(float(v))] for i, v in enumerate(d))
        rows.extend(
            [ch, "approximation", cfg.depth, i, repr(float(v))]
            for i, v in enumerate(decomp.approximation)
        )
    out = Path(out or cfg.output)
    path = out / f"decompose_{rec.id}.csv"
    atomic_write(path, _csv_text(rows))
    return path


def feature_ranks(report: RankingReport, names) -> np.ndarray:
    """1-based ranks of the features ``names`` in ``report``."""
    ranks = report.ranks()
    index = {n: i for i, n in enumerate(report.names)}
    return np.array([ranks[index[n]] for n in names])
