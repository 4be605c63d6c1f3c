"""Pure-numpy kernels. Same signatures and semantics as the compiled ``_ckernels``."""

import numpy as np

_LOG2PI = np.log(2.0 * np.pi)


def dwt_analysis(x_ext, lo, hi):
    L = lo.shape[0]
    K = (x_ext.shape[0] - L) // 2 + 1
    # windows[k, n] = x_ext[2k + n]
    windows = np.lib.stride_tricks.sliding_window_view(x_ext, L)[: 2 * K - 1 : 2]
    return windows @ lo, windows @ hi


def dwt_synthesis(a, d, lo, hi):
    L = lo.shape[0]
    K = a.shape[0]
    z = np.zeros(2 * (K - 1) + L)
    contrib = np.outer(a, lo) + np.outer(d, hi)
    for n in range(L):
        z[n : n + 2 * K - 1 : 2] += contrib[:, n]
    return z


def _fold_stats(X, y, train, n_classes):
    Xt = X[train]
    yt = y[train]
    counts = np.bincount(yt, minlength=n_classes)
    gvar = Xt.var(axis=0)
    return Xt, yt, counts, gvar


def nb_cv_confusion(X, y, folds, k, n_classes, var_smoothing):
    p = X.shape[1]
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for fold in range(k):
        test = folds == fold
        Xt, yt, counts, gvar = _fold_stats(X, y, ~test, n_classes)
        floor = var_smoothing * (gvar + 1e-12)
        present = np.flatnonzero(counts > 0)
        means = np.zeros((n_classes, p))
        variances = np.zeros((n_classes, p))
        for c in present:
            Xc = Xt[yt == c]
            means[c] = Xc.mean(axis=0)
            variances[c] = np.maximum(Xc.var(axis=0), floor)
        Xs = X[test]
        scores = np.full((Xs.shape[0], n_classes), -np.inf)
        for c in present:
            diff = Xs - means[c]
            scores[:, c] = (
                np.log(counts[c] / counts.sum())
                - 0.5 * np.sum(np.log(2.0 * np.pi * variances[c]))
                - np.sum(diff * diff / (2.0 * variances[c]), axis=1)
            )
        pred = np.argmax(scores, axis=1)
        np.add.at(confusion, (y[test], pred), 1)
    return confusion


def full_cv_confusion(X, y, folds, k, n_classes, reg):
    p = X.shape[1]
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for fold in range(k):
        test = folds == fold
        Xt, yt, counts, gvar = _fold_stats(X, y, ~test, n_classes)
        ridge = np.diag(reg * (gvar + 1e-12))
        Xs = X[test]
        scores = np.full((Xs.shape[0], n_classes), -np.inf)
        for c in np.flatnonzero(counts > 0):
            Xc = Xt[yt == c]
            mu = Xc.mean(axis=0)
            r = Xc - mu
            cov = r.T @ r / Xc.shape[0] + ridge
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise ValueError("class covariance is not positive definite") from exc
            z = np.linalg.solve(chol, (Xs - mu).T)
            logdet_half = np.sum(np.log(np.diag(chol)))
            scores[:, c] = (
                np.log(counts[c] / counts.sum())
                - logdet_half
                - 0.5 * p * _LOG2PI
                - 0.5 * np.sum(z * z, axis=0)
            )
        pred = np.argmax(scores, axis=1)
        np.add.at(confusion, (y[test], pred), 1)
    return confusion
