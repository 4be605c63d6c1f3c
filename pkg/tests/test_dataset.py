import json
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coalsel.baselines import DiscretizationScheme, contingency, table_info_gain
from coalsel.classifier import cv_accuracy
from coalsel.dataset import (
    PLANTED_XOR_BENCHMARK,
    Manifest,
    Record,
    SyntheticSpec,
    filter_names_for,
    generate_synthetic,
    load_records,
    make_rng,
    parse_component,
    planted_features,
    stratified_kfold,
    write_records,
)
from coalsel.features import build_feature_matrix
from coalsel.wavelet import Signal, get_filter

CHANNELS = ["ECG", "PLETH", "ABP"]


def write_layout(root, records, channels=CHANNELS, rate=125.0):
    """Write the on-disk layout by hand, independent of write_records."""
    root.mkdir(parents=True, exist_ok=True)
    manifest = {"channels": channels, "sample_rate": rate,
                "records": [{"id": rid, "label": label} for rid, label, _ in records]}
    (root / "manifest.json").write_text(json.dumps(manifest))
    for rid, _, data in records:
        (root / rid).mkdir()
        for ch in channels:
            lines = ["value"] + [str(v) for v in data.get(ch, [])]
            if ch in data:
                (root / rid / f"{ch}.csv").write_text("\n".join(lines) + "\n")


def test_ingests_valid_records(tmp_path):
    data = {ch: [0.5, 1.0, -2.25] for ch in CHANNELS}
    write_layout(tmp_path, [("a", "true", data), ("b", "false", data)])
    recs = load_records(tmp_path)
    assert [r.id for r in recs] == ["a", "b"]
    assert [r.label for r in recs] == ["true", "false"]
    assert list(recs[0].channels) == CHANNELS
    assert recs[1].channels["ABP"].samples.tolist() == [0.5, 1.0, -2.25]
    assert recs[0].channels["ECG"].sample_rate == 125.0


def test_nan_sample_names_record_and_index(tmp_path):
    good = {ch: [0.0, 1.0, 2.0] for ch in CHANNELS}
    bad = dict(good, PLETH=[0.0, 1.0, "nan"])
    write_layout(tmp_path, [("ok1", "true", good), ("rec7", "false", bad)])
    with pytest.raises(ValueError, match=r"rec7.*PLETH.*sample 2"):
        load_records(tmp_path)


def test_other_ingestion_errors(tmp_path):
    good = {ch: [0.0, 1.0] for ch in CHANNELS}
    write_layout(tmp_path / "missing", [("r1", "true", {"ECG": [1.0]})])
    with pytest.raises(ValueError, match="r1.*missing channel PLETH"):
        load_records(tmp_path / "missing")
    write_layout(tmp_path / "label", [("r2", "maybe", good)])
    with pytest.raises(ValueError, match="r2.*unknown label"):
        load_records(tmp_path / "label")
    write_layout(tmp_path / "text", [("r3", "true", dict(good, ABP=[1.0, "abc"]))])
    with pytest.raises(ValueError, match="r3.*ABP sample 1 is not a number"):
        load_records(tmp_path / "text")


def test_empty_manifest_gives_empty_list(tmp_path):
    write_layout(tmp_path, [])
    assert load_records(tmp_path) == []


def test_unknown_labels_are_skipped_with_warning(tmp_path, caplog):
    data = {ch: [1.0] for ch in CHANNELS}
    write_layout(tmp_path, [("a", "unknown", data), ("b", "true", data), ("c", "unknown", data)])
    with caplog.at_level(logging.WARNING):
        recs = load_records(tmp_path)
    assert [r.id for r in recs] == ["b"]
    assert "skipped 2" in caplog.text


def test_round_trip_is_lossless(tmp_path, rng):
    chans = {ch: Signal(ch, rng.standard_normal(50) * 10.0 ** rng.integers(-12, 12, 50), 250.0)
             for ch in CHANNELS}
    recs = [Record("x1", chans, "true"), Record("x2", chans, "false")]
    write_records(recs, tmp_path / "one")
    loaded = load_records(tmp_path / "one")
    write_records(loaded, tmp_path / "two")
    for rec, back in zip(recs, loaded):
        for ch in CHANNELS:
            assert back.channels[ch].samples.tobytes() == rec.channels[ch].samples.tobytes()
    for p in (tmp_path / "one").rglob("*.csv"):
        assert p.read_bytes() == (tmp_path / "two" / p.relative_to(tmp_path / "one")).read_bytes()
    assert Manifest.load(tmp_path / "two" / "manifest.json").sample_rate == 250.0


def test_kfold_exact_divisibility():
    labels = ["a"] * 5 + ["b"] * 5
    plan = stratified_kfold(labels, 5, seed=3)
    for f in range(5):
        _, test = plan.fold(f)
        assert sorted(labels[i] for i in test) == ["a", "b"]


def test_kfold_six_four_split():
    labels = ["t"] * 6 + ["f"] * 4
    plan = stratified_kfold(labels, 2, seed=0)
    for f in range(2):
        _, test = plan.fold(f)
        assert sorted(labels[i] for i in test) == ["f", "f", "t", "t", "t"]


def test_kfold_deterministic_and_validated():
    labels = np.array([0, 1] * 20)
    a = stratified_kfold(labels, 4, 9)
    b = stratified_kfold(labels, 4, 9)
    assert np.array_equal(a.fold_assignments, b.fold_assignments)
    with pytest.raises(ValueError, match="fewer than k"):
        stratified_kfold([0, 0, 0, 1], 2, 0)
    with pytest.raises(ValueError):
        stratified_kfold(labels, 1, 0)


def test_stratification_bound_on_random_label_vectors():
    rng = make_rng(2024)
    for trial in range(500):
        k = int(rng.integers(2, 8))
        n_classes = int(rng.integers(2, 4))
        n = int(rng.integers(k * n_classes, 120))
        labels = rng.integers(0, n_classes, n)
        labels[: k * n_classes] = np.repeat(np.arange(n_classes), k)
        plan = stratified_kfold(labels, k, trial)
        sizes = np.bincount(plan.fold_assignments, minlength=k)
        assert sizes.max() - sizes.min() <= 1
        for c in range(n_classes):
            per_fold = np.bincount(plan.fold_assignments[labels == c], minlength=k)
            assert per_fold.max() - per_fold.min() <= 1


def test_parse_component():
    assert parse_component("ECG:L2") == ("ECG", 2)
    assert parse_component(("ABP", 6)) == ("ABP", 6)
    with pytest.raises(ValueError):
        parse_component("ECG-2")


def _pair_spec(**kw):
    base = dict(n_samples=200, channels=CHANNELS, signal_length=256, depth=2,
                coalitions=[["ECG:L1", "PLETH:L2"]])
    base.update(kw)
    return SyntheticSpec(**base)


def _matrix(records, depth):
    chans = list(records[0].channels)
    filters = {ch: get_filter(n) for ch, n in filter_names_for(chans).items()}
    return build_feature_matrix(records, filters, depth=depth)


def best_threshold_pair_accuracy(a, b, y):
    """Exhaustive depth-2 rule: split on a, then on b in each branch."""
    best = 0.0
    for t in np.unique(a)[:-1]:
        left = a <= t
        correct = 0
        for side in (left, ~left):
            order = np.argsort(b[side], kind="stable")
            bs, ys = b[side][order], y[side][order]
            # cut after position i: first i predicted as class c, the rest as 1 - c
            cuts = np.concatenate([[0], np.flatnonzero(np.diff(bs) > 0) + 1, [bs.size]])
            cum1 = np.concatenate([[0], np.cumsum(ys)])[cuts]
            cum0 = cuts - cum1
            tot1 = ys.sum()
            tot0 = ys.size - tot1
            correct += max((cum0 + tot1 - cum1).max(), (cum1 + tot0 - cum0).max())
        best = max(best, correct / y.size)
    return best


def test_planted_pair_is_marginally_silent_but_jointly_decisive():
    spec = _pair_spec()
    m = _matrix(generate_synthetic(spec, 7), spec.depth)
    y = (np.asarray(m.labels) == "true").astype(float)
    cols = [m.names.index(n) for n in planted_features(spec)]
    assert planted_features(spec) == ["ECG_L1_mean", "PLETH_L2_mean"]
    for c in cols:
        r = np.corrcoef(m.rows[:, c], y)[0, 1]
        assert abs(r) < 0.15
    assert best_threshold_pair_accuracy(m.rows[:, cols[0]], m.rows[:, cols[1]], y.astype(int)) >= 0.95


def test_threshold_pair_oracle_on_hand_case():
    a = np.array([0, 0, 1, 1, 0, 0, 1, 1], dtype=float)
    b = np.array([0, 1, 0, 1, 0, 1, 0, 1], dtype=float)
    y = np.array([0, 1, 1, 0, 0, 1, 1, 0])
    assert best_threshold_pair_accuracy(a, b, y) == 1.0
    assert best_threshold_pair_accuracy(a, a, y) == 0.5


def test_triple_coalition_parity():
    spec = _pair_spec(coalitions=[["ECG:L1", "PLETH:L1", "ABP:L2"]], coalition_shift=8.0)
    m = _matrix(generate_synthetic(spec, 1), spec.depth)
    bits = np.column_stack([m.rows[:, m.names.index(n)] > 0 for n in planted_features(spec)])
    parity = bits.sum(axis=1) % 2
    y = (np.asarray(m.labels) == "true").astype(int)
    assert np.mean(parity == y) > 0.95


def test_generator_is_deterministic():
    spec = _pair_spec(n_samples=20)
    a, b = generate_synthetic(spec, 11), generate_synthetic(spec, 11)
    for ra, rb in zip(a, b):
        assert ra.id == rb.id and ra.label == rb.label
        for ch in CHANNELS:
            assert ra.channels[ch].samples.tobytes() == rb.channels[ch].samples.tobytes()
    c = generate_synthetic(spec, 12)
    assert a[0].channels["ECG"].samples.tobytes() != c[0].channels["ECG"].samples.tobytes()


def test_labels_are_balanced():
    for n in (10, 11):
        recs = generate_synthetic(_pair_spec(n_samples=n, coalitions=[]), 0)
        trues = sum(r.label == "true" for r in recs)
        assert trues in (n // 2, n - n // 2)


def test_null_model_accuracy_near_majority_rate():
    spec = SyntheticSpec(n_samples=200, channels=["ECG"], signal_length=64, depth=2)
    m = _matrix(generate_synthetic(spec, 5), spec.depth)
    plan = stratified_kfold(m.labels, 5, 0)
    sigma = np.sqrt(0.25 / m.n_samples)
    for c in range(m.n_features):
        for clf in ("gaussian-nb", "gaussian-full"):
            acc = cv_accuracy(m, [c], plan, clf).accuracy
            assert abs(acc - 0.5) < 3 * sigma + 0.02


def test_null_model_mutual_information():
    # plug-in MI over 10 bins x 2 classes is biased upward by about
    # 9 / (2 N ln 2) bits: 0.013 at N = 500 (but 0.032 at N = 200)
    spec = SyntheticSpec(n_samples=500, channels=["ECG"], signal_length=64, depth=2)
    total = None
    for seed in range(50):
        m = _matrix(generate_synthetic(spec, seed), spec.depth)
        y = (np.asarray(m.labels) == "true").astype(np.int64)
        binned = DiscretizationScheme.equal_frequency(m.rows).transform(m.rows)
        mi = np.array([table_info_gain(contingency(binned[:, f], y, 2)) for f in range(m.n_features)])
        total = mi if total is None else total + mi
    assert np.all(total / 50 < 0.02)


def test_decoys_match_first_two_moments_across_classes():
    spec = SyntheticSpec.from_dict(PLANTED_XOR_BENCHMARK)
    m = _matrix(generate_synthetic(spec, 0), spec.depth)
    y = np.asarray(m.labels) == "true"
    cols = [m.names.index(n) for n in ("ECG_L2_mean", "PLETH_L2_mean")]
    X = m.rows[:, cols]
    s = X.std()
    assert np.all(np.abs(X[y].mean(axis=0) - X[~y].mean(axis=0)) < 0.25 * s)
    assert np.all(np.abs(X[y].std(axis=0) / X[~y].std(axis=0) - 1) < 0.15)
    # yet the label changes their distribution
    binned = DiscretizationScheme.equal_frequency(X).transform(X)
    assert table_info_gain(contingency(binned[:, 0], y.astype(np.int64), 2)) > 0.1


@given(st.integers(3, 8), st.integers(1, 3))
def test_spec_rejects_oversized_coalition(extra, depth):
    chans = ["ECG"]
    comps = [f"ECG:L{lv}" for lv in range(1, depth + 1)] + [f"ECG:L{depth + i + 1}" for i in range(extra)]
    spec = SyntheticSpec(n_samples=10, channels=chans, signal_length=64, depth=depth, coalitions=[comps])
    with pytest.raises(ValueError, match="exceeds"):
        spec.validate()


def test_spec_validation_errors():
    with pytest.raises(ValueError, match="planted twice"):
        _pair_spec(coalitions=[["ECG:L1", "PLETH:L1"]], decoys=["ECG:L1"]).validate()
    with pytest.raises(ValueError, match="not among"):
        _pair_spec(coalitions=[["ECG:L1", "ECG:L3"]]).validate()
    with pytest.raises(ValueError, match="at least 2"):
        _pair_spec(coalitions=[["ECG:L1"]]).validate()
    with pytest.raises(ValueError, match="divisible"):
        _pair_spec(signal_length=250).validate()
    with pytest.raises(ValueError, match="unknown synthetic"):
        SyntheticSpec.from_dict({"samples": 3})
    assert SyntheticSpec.from_dict(_pair_spec().to_dict()) == _pair_spec()
