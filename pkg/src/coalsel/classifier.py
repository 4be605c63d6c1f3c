"""Gaussian Bayes classifiers and cross-validated accuracy.

Two class-conditional models are provided:

``gaussian-nb``
    Independent Gaussian per feature and class (naive Bayes).
``gaussian-full``
    Full-covariance Gaussian per class, i.e. the Gaussian Bayes network whose
    within-class graph over the features is complete. It can represent
    feature interactions such as opposite-sign correlations between classes,
    which naive Bayes cannot.

Classes are ordered lexicographically by label; prediction ties go to the
smaller label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coalsel._backend import get_kernels

CLASSIFIERS = ("gaussian-nb", "gaussian-full")
VAR_SMOOTHING = 1e-9
COV_SMOOTHING = 1e-6


@dataclass(frozen=True)
class GaussianNBModel:
    classes: tuple
    class_priors: np.ndarray
    means: np.ndarray  # (classes, features)
    variances: np.ndarray
    variance_floor: np.ndarray  # per feature

    @property
    def n_features(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class GaussianFullModel:
    classes: tuple
    class_priors: np.ndarray
    means: np.ndarray
    covariances: np.ndarray  # (classes, features, features), ridge included

    @property
    def n_features(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class EvalResult:
    classes: tuple
    confusion: np.ndarray  # rows: true class, columns: predicted

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    @property
    def recall(self) -> dict:
        out = {}
        for i, c in enumerate(self.classes):
            support = self.confusion[i].sum()
            out[c] = float(self.confusion[i, i] / support) if support else 0.0
        return out


def _subset_arrays(matrix, column_subset):
    cols = sorted(set(int(c) for c in column_subset))
    if not cols:
        raise ValueError("column subset must be non-empty")
    if cols[0] < 0 or cols[-1] >= matrix.n_features:
        raise ValueError(f"column index out of range 0..{matrix.n_features - 1}")
    return np.ascontiguousarray(matrix.rows[:, cols]), np.asarray(matrix.labels)


def _encode(labels):
    classes = tuple(sorted(set(labels.tolist())))
    lookup = {c: i for i, c in enumerate(classes)}
    return classes, np.array([lookup[v] for v in labels.tolist()], dtype=np.int64)


def fit_arrays(X, labels, var_smoothing: float = VAR_SMOOTHING) -> GaussianNBModel:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    classes, y = _encode(np.asarray(labels))
    if len(classes) < 2:
        raise ValueError("training data must contain at least two classes")
    floor = var_smoothing * (X.var(axis=0) + 1e-12)
    counts = np.bincount(y, minlength=len(classes))
    means = np.array([X[y == c].mean(axis=0) for c in range(len(classes))])
    variances = np.array([np.maximum(X[y == c].var(axis=0), floor) for c in range(len(classes))])
    return GaussianNBModel(classes, counts / counts.sum(), means, variances, floor)


def fit(matrix, column_subset, var_smoothing: float = VAR_SMOOTHING) -> GaussianNBModel:
    """Naive-Bayes model on ``column_subset`` of ``matrix``."""
    X, labels = _subset_arrays(matrix, column_subset)
    return fit_arrays(X, labels, var_smoothing)


def fit_full_arrays(X, labels, reg: float = COV_SMOOTHING) -> GaussianFullModel:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    classes, y = _encode(np.asarray(labels))
    if len(classes) < 2:
        raise ValueError("training data must contain at least two classes")
    ridge = np.diag(reg * (X.var(axis=0) + 1e-12))
    counts = np.bincount(y, minlength=len(classes))
    means, covs = [], []
    for c in range(len(classes)):
        Xc = X[y == c]
        mu = Xc.mean(axis=0)
        r = Xc - mu
        means.append(mu)
        covs.append(r.T @ r / Xc.shape[0] + ridge)
    return GaussianFullModel(classes, counts / counts.sum(), np.array(means), np.array(covs))


def fit_full(matrix, column_subset, reg: float = COV_SMOOTHING) -> GaussianFullModel:
    X, labels = _subset_arrays(matrix, column_subset)
    return fit_full_arrays(X, labels, reg)


def log_joint(model, rows) -> np.ndarray:
    """``log P(class) + log p(row | class)`` for every row and class."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] != model.n_features:
        raise ValueError(f"rows have {rows.shape[1]} features; model expects {model.n_features}")
    out = np.empty((rows.shape[0], len(model.classes)))
    for c in range(len(model.classes)):
        diff = rows - model.means[c]
        if isinstance(model, GaussianNBModel):
            var = model.variances[c]
            dens = -0.5 * np.sum(np.log(2.0 * np.pi * var)) - np.sum(diff * diff / (2.0 * var), axis=1)
        else:
            chol = np.linalg.cholesky(model.covariances[c])
            z = np.linalg.solve(chol, diff.T)
            dens = (
                -np.sum(np.log(np.diag(chol)))
                - 0.5 * model.n_features * np.log(2.0 * np.pi)
                - 0.5 * np.sum(z * z, axis=0)
            )
        out[:, c] = np.log(model.class_priors[c]) + dens
    return out


def predict(model, rows) -> np.ndarray:
    """Most probable class label per row (ties to the smaller label)."""
    scores = log_joint(model, rows)
    return np.array(model.classes)[np.argmax(scores, axis=1)]


def cv_accuracy(matrix, column_subset, plan, classifier: str = "gaussian-nb", backend=None) -> EvalResult:
    """Pooled confusion matrix over the folds of ``plan``."""
    X, labels = _subset_arrays(matrix, column_subset)
    folds = np.ascontiguousarray(plan.fold_assignments, dtype=np.int64)
    if folds.size != X.shape[0]:
        raise ValueError(f"plan covers {folds.size} rows; matrix has {X.shape[0]}")
    classes, y = _encode(labels)
    return EvalResult(classes, cv_confusion(X, y, folds, plan.k, len(classes), classifier, backend))


def cv_confusion(X, y, folds, k, n_classes, classifier="gaussian-nb", backend=None) -> np.ndarray:
    """Kernel entry point on pre-encoded arrays (``y`` as class indices)."""
    for fold in range(k):
        train = y[folds != fold]
        if np.unique(train).size < 2:
            raise ValueError(f"training part of fold {fold} holds a single class")
    kern = get_kernels(backend)
    if classifier == "gaussian-nb":
        return kern.nb_cv_confusion(X, y, folds, k, n_classes, VAR_SMOOTHING)
    if classifier == "gaussian-full":
        return kern.full_cv_confusion(X, y, folds, k, n_classes, COV_SMOOTHING)
    raise ValueError(f"unknown classifier {classifier!r}; expected one of {CLASSIFIERS}")


class SubsetScorer:
    """Cross-validated accuracy of column subsets with the label encoding and
    fold checks done once. Safe to call from several threads."""

    def __init__(self, matrix, plan, classifier: str = "gaussian-full", backend=None):
        if classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {classifier!r}; expected one of {CLASSIFIERS}")
        self.X = np.ascontiguousarray(matrix.rows)
        self.classes, self.y = _encode(np.asarray(matrix.labels))
        self.folds = np.ascontiguousarray(plan.fold_assignments, dtype=np.int64)
        if self.folds.size != self.X.shape[0]:
            raise ValueError(f"plan covers {self.folds.size} rows; matrix has {self.X.shape[0]}")
        self.k = plan.k
        for fold in range(self.k):
            if np.unique(self.y[self.folds != fold]).size < 2:
                raise ValueError(f"training part of fold {fold} holds a single class")
        self.classifier = classifier
        kern = get_kernels(backend)
        if classifier == "gaussian-nb":
            self._kernel, self._smooth = kern.nb_cv_confusion, VAR_SMOOTHING
        else:
            self._kernel, self._smooth = kern.full_cv_confusion, COV_SMOOTHING
        counts = np.bincount(self.y, minlength=len(self.classes))
        self.majority_rate = float(counts.max() / counts.sum())

    def confusion(self, subset) -> np.ndarray:
        cols = list(subset)
        Xs = np.ascontiguousarray(self.X[:, cols])
        return self._kernel(Xs, self.y, self.folds, self.k, len(self.classes), self._smooth)

    def accuracy(self, subset) -> float:
        conf = self.confusion(subset)
        return float(np.trace(conf) / conf.sum())

    def evaluate(self, subset) -> EvalResult:
        return EvalResult(self.classes, self.confusion(subset))
