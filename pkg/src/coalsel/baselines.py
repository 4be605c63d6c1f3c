"""Univariate filter selectors: chi-square, information gain, gain ratio and ReliefF."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coalsel.dataset import make_rng
from coalsel.ranking import RankingReport

DEFAULT_BINS = 10
DEFAULT_RELIEF_K = 10


@dataclass(frozen=True)
class DiscretizationScheme:
    """Equal-frequency bins. ``edges[f]`` holds the strictly increasing interior
    cut points of feature ``f``; a value ``x`` falls in bin
    ``searchsorted(edges[f], x, side="left")``, i.e. values equal to a cut
    stay in the lower bin."""

    bins: int
    edges: tuple

    @classmethod
    def equal_frequency(cls, rows, bins: int = DEFAULT_BINS) -> "DiscretizationScheme":
        if bins < 2:
            raise ValueError("at least 2 bins are required")
        rows = np.asarray(rows, dtype=np.float64)
        qs = np.arange(1, bins) / bins
        edges = []
        for col in rows.T:
            cuts = np.unique(np.quantile(col, qs, method="inverted_cdf"))
            # a cut at the maximum would leave its upper bin empty
            edges.append(cuts[cuts < col.max()])
        return cls(bins, tuple(edges))

    def transform(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        return np.column_stack(
            [np.searchsorted(e, col, side="left") for e, col in zip(self.edges, rows.T)]
        ).astype(np.int64) if rows.shape[1] else np.empty((rows.shape[0], 0), dtype=np.int64)


def _entropy_bits(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)) + 0.0)


def contingency(binned_col, y, n_classes) -> np.ndarray:
    n_bins = int(binned_col.max()) + 1
    table = np.zeros((n_bins, n_classes), dtype=np.int64)
    np.add.at(table, (binned_col, y), 1)
    return table


def table_info_gain(table) -> float:
    table = np.asarray(table, dtype=np.float64)
    total = table.sum()
    h_y = _entropy_bits(table.sum(axis=0))
    h_y_given_x = sum(row.sum() / total * _entropy_bits(row) for row in table if row.sum() > 0)
    return max(h_y - h_y_given_x, 0.0)


def table_gain_ratio(table) -> float:
    h_x = _entropy_bits(np.asarray(table).sum(axis=1))
    return table_info_gain(table) / h_x if h_x > 0 else 0.0


def table_chi_square(table) -> float:
    table = np.asarray(table, dtype=np.float64)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.size == 0:
        return 0.0
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
    return float(np.sum((table - expected) ** 2 / expected))


def _encode_labels(labels):
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise ValueError("both classes must be present")
    lookup = {c: i for i, c in enumerate(classes)}
    return np.array([lookup[v] for v in labels.tolist()], dtype=np.int64), len(classes)


def _table_scores(matrix, scheme, score):
    if scheme is None:
        scheme = DiscretizationScheme.equal_frequency(matrix.rows)
    y, C = _encode_labels(matrix.labels)
    binned = scheme.transform(matrix.rows)
    return np.array([score(contingency(binned[:, f], y, C)) for f in range(binned.shape[1])])


def info_gain(matrix, scheme: DiscretizationScheme | None = None) -> RankingReport:
    """``H(Y) - H(Y | binned X)`` in bits per feature."""
    return RankingReport("info-gain", _table_scores(matrix, scheme, table_info_gain), matrix.names)


def gain_ratio(matrix, scheme: DiscretizationScheme | None = None) -> RankingReport:
    """Information gain over the entropy of the binned feature (0 when that entropy is 0)."""
    return RankingReport("gain-ratio", _table_scores(matrix, scheme, table_gain_ratio), matrix.names)


def chi_square(matrix, scheme: DiscretizationScheme | None = None) -> RankingReport:
    """Pearson chi-square statistic of the bins x classes table (empty rows/columns dropped)."""
    return RankingReport("chi2", _table_scores(matrix, scheme, table_chi_square), matrix.names)


def relief_weights(X, y, m: int | None = None, k_neighbors: int = DEFAULT_RELIEF_K, seed: int = 0):
    """ReliefF weights on range-normalized features with Euclidean neighbors.

    ``m=None`` visits every sample once in index order; otherwise ``m``
    distinct samples are drawn with the seeded generator.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() <= k_neighbors:
        raise ValueError(
            f"every class needs more than k_neighbors={k_neighbors} members; smallest has {counts.min()}"
        )
    span = X.max(axis=0) - X.min(axis=0)
    scale = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (X - X.min(axis=0)) / scale, 0.0)
    if m is None or m >= n:
        draws = np.arange(n)
    else:
        draws = np.sort(make_rng(seed).choice(n, size=m, replace=False))
    m = draws.size
    priors = dict(zip(classes.tolist(), (counts / n).tolist()))
    W = np.zeros(p)
    for i in draws:
        diff = np.abs(Z - Z[i])
        dist = np.sqrt(np.sum(diff * diff, axis=1))
        dist[i] = np.inf
        order = np.argsort(dist, kind="stable")
        same = y[order] == y[i]
        hits = order[same][:k_neighbors]
        W -= diff[hits].sum(axis=0) / (m * k_neighbors)
        for c in classes.tolist():
            if c == y[i]:
                continue
            misses = order[y[order] == c][:k_neighbors]
            weight = priors[c] / (1.0 - priors[y[i]])
            W += weight * diff[misses].sum(axis=0) / (m * k_neighbors)
    return W


def relief(matrix, m: int | None = None, k_neighbors: int = DEFAULT_RELIEF_K, seed: int = 0) -> RankingReport:
    y, _ = _encode_labels(matrix.labels)
    W = relief_weights(matrix.rows, y, m, k_neighbors, seed)
    return RankingReport("relief", W, matrix.names, seed=int(seed))
