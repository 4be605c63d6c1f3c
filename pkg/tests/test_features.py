import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coalsel.dataset import SyntheticSpec, filter_names_for, generate_synthetic
from coalsel.features import (
    DEFAULT_CATALOG,
    EXTENDED_CATALOG,
    FeatureDescriptor,
    FeatureMatrix,
    build_feature_matrix,
    excess_kurtosis,
    extract_features,
    resolve_catalog,
    shannon_entropy,
    skewness,
    zero_crossing_rate,
)
from coalsel.wavelet import Signal, get_filter

vectors = arrays(np.float64, st.integers(4, 80), elements=st.floats(-1e3, 1e3, width=64))


def moment_oracle(x):
    """Population skewness and excess kurtosis by explicit summation."""
    n = len(x)
    mean = sum(x) / n
    m2 = sum((v - mean) ** 2 for v in x) / n
    m3 = sum((v - mean) ** 3 for v in x) / n
    m4 = sum((v - mean) ** 4 for v in x) / n
    return m3 / m2**1.5, m4 / m2**2 - 3.0


def test_mean_and_std():
    f = extract_features(np.array([1.0, 2.0, 3.0, 4.0]))
    assert f["mean"] == 2.5
    assert abs(f["std"] - math.sqrt(1.25)) < 1e-15


def test_entropy_conventions():
    assert shannon_entropy([1, 1, 1, 1], method="magnitude") == 2.0
    # histogram estimator: every point in a single bin
    assert shannon_entropy([1, 1, 1, 1]) == 0.0
    # two magnitudes, two occupied bins of equal mass
    assert shannon_entropy([1, -1, 3, 3]) == 1.0
    assert shannon_entropy([0, 0, 0], method="magnitude") == 0.0
    with pytest.raises(ValueError):
        shannon_entropy([1, 2], method="kde")


def test_entropy_scale_invariant_with_points_on_bin_edges():
    x = np.arange(17.0)
    base = shannon_entropy(x)
    for c in (3.3, 0.1, 7.77, 1e-6):
        assert shannon_entropy(c * x) == base


def test_symmetric_vector_moments():
    x = [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert abs(skewness(x)) < 1e-12
    _, kurt = moment_oracle(x)
    assert abs(excess_kurtosis(x) - kurt) < 1e-12
    assert abs(kurt - (-1.3)) < 1e-12


@given(vectors)
def test_moments_match_summation_oracle(x):
    if np.ptp(x) < 1e-3:
        return
    skew, kurt = moment_oracle(x.tolist())
    assert skewness(x) == pytest.approx(skew, rel=1e-8, abs=1e-8)
    assert excess_kurtosis(x) == pytest.approx(kurt, rel=1e-8, abs=1e-8)


def test_degenerate_vectors():
    f = extract_features(np.full(10, 3.0))
    assert f["skewness"] == 0.0 and f["kurtosis"] == 0.0
    assert f["zcr"] == 0.0 and f["entropy"] == 0.0
    assert f["std"] == 0.0


def test_moments_of_tiny_spread_are_finite():
    # the squared spread underflows; the shape statistics must not
    x = np.array([0.0, 0.0, 0.0, 1e-120])
    assert skewness(x) == pytest.approx(skewness(x * 1e120), rel=1e-12)
    assert excess_kurtosis(x) == pytest.approx(excess_kurtosis(x * 1e120), rel=1e-12)


def test_zero_crossing_rate():
    assert zero_crossing_rate([1, -1, 1, -1]) == 1.0
    assert zero_crossing_rate([1, 0, -1]) == 0.0
    assert zero_crossing_rate([2.0]) == 0.0
    # the product of neighbours underflows here, the sign change is still real
    assert zero_crossing_rate([2.5e-66, -1.3e-259]) == 1.0


@given(vectors, st.floats(1e-3, 1e3))
def test_scale_invariance_and_equivariance(x, c):
    if np.ptp(x) < 1e-3:
        return
    f = extract_features(x, EXTENDED_CATALOG)
    g = extract_features(c * x, EXTENDED_CATALOG)
    for stat in ("skewness", "kurtosis", "entropy", "zcr"):
        assert abs(f[stat] - g[stat]) <= 1e-9 * max(1.0, abs(f[stat]))
    for stat in ("mean", "median", "min", "max", "p05", "p25", "p75", "p95", "std", "rms"):
        assert g[stat] == pytest.approx(c * f[stat], rel=1e-9, abs=1e-9)


@given(vectors, st.floats(-100, 100))
def test_location_equivariance(x, b):
    f = extract_features(x, EXTENDED_CATALOG)
    g = extract_features(x + b, EXTENDED_CATALOG)
    for stat in ("mean", "median", "min", "max", "p05", "p95"):
        assert g[stat] == pytest.approx(f[stat] + b, rel=1e-9, abs=1e-7)
    for stat in ("std", "iqr", "range"):
        assert g[stat] == pytest.approx(f[stat], rel=1e-9, abs=1e-7)


def test_extended_catalog_values():
    x = np.array([1.0, -2.0, 3.0, -4.0])
    f = extract_features(x, EXTENDED_CATALOG)
    assert f["energy"] == 30.0
    assert f["range"] == 7.0
    assert f["linelength"] == 3.0 + 5.0 + 7.0
    assert f["mad"] == pytest.approx(np.mean(np.abs(x - x.mean())))
    assert f["logenergy"] == pytest.approx(math.log(1) + math.log(4) + math.log(9) + math.log(16))
    assert len(EXTENDED_CATALOG) == 20 and len(DEFAULT_CATALOG) == 10


def test_resolve_catalog():
    assert resolve_catalog("default") == DEFAULT_CATALOG
    assert resolve_catalog(["mean", "iqr"]) == ("mean", "iqr")
    with pytest.raises(ValueError):
        resolve_catalog("huge")
    with pytest.raises(ValueError):
        resolve_catalog(["mean", "nope"])


@given(
    st.from_regex(r"[A-Za-z0-9]{1,6}", fullmatch=True),
    st.integers(1, 12),
    st.sampled_from(EXTENDED_CATALOG),
)
def test_descriptor_name_round_trip(channel, level, stat):
    d = FeatureDescriptor(channel, level, stat)
    assert FeatureDescriptor.from_name(d.name) == d


def test_descriptor_rejects_bad_names():
    for bad in ("ECG_2_mean", "E_CG_L2_mean", "ECG_L2_"):
        with pytest.raises(ValueError):
            FeatureDescriptor.from_name(bad)


def _records(n, channels=("ECG", "PLETH", "ABP"), length=256, seed=0):
    spec = SyntheticSpec(n_samples=n, channels=list(channels), signal_length=length, depth=6)
    return generate_synthetic(spec, seed)


def test_three_channels_six_levels_give_180_columns():
    recs = _records(6)
    filters = {ch: get_filter(n) for ch, n in filter_names_for(["ECG", "PLETH", "ABP"]).items()}
    m = build_feature_matrix(recs, filters, depth=6)
    assert m.rows.shape == (6, 180)
    assert m.names[0] == "ECG_L1_mean" and m.names[-1] == "ABP_L6_zcr"
    assert len(set(m.names)) == 180


def test_one_channel_one_level(rng):
    catalog = ("mean", "rms", "iqr")
    recs = [({"X": Signal("X", rng.standard_normal(32))}, "true") for _ in range(3)]
    m = build_feature_matrix(recs, {"X": get_filter("db4")}, depth=1, catalog=catalog)
    assert m.names == ["X_L1_mean", "X_L1_rms", "X_L1_iqr"]


def test_identical_records_give_identical_rows(rng):
    x = rng.standard_normal(128)
    recs = [({"ECG": x.copy()}, "true"), ({"ECG": x.copy()}, "false")]
    m = build_feature_matrix(recs, {"ECG": get_filter("db8")}, depth=3)
    assert m.rows[0].tobytes() == m.rows[1].tobytes()
    again = build_feature_matrix(recs, {"ECG": get_filter("db8")}, depth=3)
    assert again.rows.tobytes() == m.rows.tobytes()


def test_synthetic_columns_finite_and_non_constant():
    recs = _records(20)
    filters = {ch: get_filter(n) for ch, n in filter_names_for(["ECG", "PLETH", "ABP"]).items()}
    m = build_feature_matrix(recs, filters, depth=6, catalog="extended")
    assert np.all(np.isfinite(m.rows))
    assert np.all(np.ptp(m.rows, axis=0) > 0)


def test_inconsistent_channels_rejected(rng):
    recs = [({"ECG": rng.standard_normal(64)}, "true"), ({"PLETH": rng.standard_normal(64)}, "false")]
    with pytest.raises(ValueError, match="#1"):
        build_feature_matrix(recs, {"ECG": get_filter("db4"), "PLETH": get_filter("db4")}, depth=2,
                             channels=["ECG"])
    with pytest.raises(ValueError, match="no wavelet filter"):
        build_feature_matrix(recs[:1], {}, depth=2)


def test_csv_round_trip(tmp_path, rng):
    descriptors = [FeatureDescriptor("ECG", 1, "mean"), FeatureDescriptor("ECG", 1, "std")]
    rows = rng.standard_normal((5, 2)) * 1e-7
    m = FeatureMatrix(descriptors, rows, ["true", "false", "true", "false", "true"])
    path = tmp_path / "f.csv"
    m.to_csv(path)
    raw = path.read_bytes()
    assert raw.startswith(b"ECG_L1_mean,ECG_L1_std,label\r\n")
    back = FeatureMatrix.from_csv(path)
    assert back.rows.tobytes() == m.rows.tobytes()
    assert list(back.labels) == list(m.labels)
    buf = io.StringIO()
    back.to_csv_stream(buf)
    assert buf.getvalue().encode() == raw


def test_matrix_validation():
    d = [FeatureDescriptor("ECG", 1, "mean")]
    with pytest.raises(ValueError):
        FeatureMatrix(d * 2, np.zeros((2, 2)), ["a", "b"])
    with pytest.raises(ValueError):
        FeatureMatrix(d, np.array([[np.nan], [0.0]]), ["a", "b"])
    with pytest.raises(ValueError):
        FeatureMatrix(d, np.zeros((2, 1)), ["a"])
    m = FeatureMatrix(d, np.zeros((2, 1)), ["a", "b"])
    assert m.select([0]).names == ["ECG_L1_mean"]
