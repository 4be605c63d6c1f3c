# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Signatures mirror :mod:`coalsel._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()


def dwt_analysis(const double[::1] x_ext, const double[::1] lo, const double[::1] hi):
    cdef Py_ssize_t L = lo.shape[0]
    cdef Py_ssize_t K = (x_ext.shape[0] - L) // 2 + 1
    cdef Py_ssize_t k, n, base
    cdef double sa, sd, v
    a = np.empty(K, dtype=np.float64)
    d = np.empty(K, dtype=np.float64)
    cdef double[::1] av = a
    cdef double[::1] dv = d
    with nogil:
        for k in range(K):
            base = 2 * k
            sa = 0.0
            sd = 0.0
            for n in range(L):
                v = x_ext[base + n]
                sa = sa + lo[n] * v
                sd = sd + hi[n] * v
            av[k] = sa
            dv[k] = sd
    return a, d


def dwt_synthesis(const double[::1] a, const double[::1] d,
                  const double[::1] lo, const double[::1] hi):
    cdef Py_ssize_t L = lo.shape[0]
    cdef Py_ssize_t K = a.shape[0]
    cdef Py_ssize_t k, n, base
    cdef double ak, dk
    z = np.zeros(2 * (K - 1) + L, dtype=np.float64)
    cdef double[::1] zv = z
    with nogil:
        for k in range(K):
            base = 2 * k
            ak = a[k]
            dk = d[k]
            for n in range(L):
                zv[base + n] = zv[base + n] + lo[n] * ak + hi[n] * dk
    return z


cdef inline double _gauss_nb_score(const double* x, const double* mean, const double* var,
                                   Py_ssize_t p, double logprior) noexcept nogil:
    cdef double s = logprior
    cdef double diff
    cdef Py_ssize_t f
    for f in range(p):
        diff = x[f] - mean[f]
        s = s - 0.5 * log(2.0 * M_PI * var[f]) - diff * diff / (2.0 * var[f])
    return s


def nb_cv_confusion(const double[:, ::1] X, const long[::1] y, const long[::1] folds,
                    int k, int n_classes, double var_smoothing):
    """Pooled confusion counts of Gaussian naive Bayes under the given fold plan."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t C = n_classes
    cdef Py_ssize_t i, f, c, fold, best
    cdef double floor_, gm, gv, diff, s, bs
    confusion = np.zeros((C, C), dtype=np.int64)
    cdef long[:, ::1] conf = confusion
    cdef double* mean = <double*> malloc(C * p * sizeof(double))
    cdef double* var = <double*> malloc(C * p * sizeof(double))
    cdef double* gsum = <double*> malloc(p * sizeof(double))
    cdef double* gsq = <double*> malloc(p * sizeof(double))
    cdef double* logprior = <double*> malloc(C * sizeof(double))
    cdef long* count = <long*> malloc(C * sizeof(long))
    cdef long ntrain
    if mean == NULL or var == NULL or gsum == NULL or gsq == NULL or logprior == NULL or count == NULL:
        free(mean); free(var); free(gsum); free(gsq); free(logprior); free(count)
        raise MemoryError()
    try:
        with nogil:
            for fold in range(k):
                for c in range(C):
                    count[c] = 0
                    for f in range(p):
                        mean[c * p + f] = 0.0
                        var[c * p + f] = 0.0
                for f in range(p):
                    gsum[f] = 0.0
                    gsq[f] = 0.0
                ntrain = 0
                for i in range(n):
                    if folds[i] == fold:
                        continue
                    c = y[i]
                    count[c] += 1
                    ntrain += 1
                    for f in range(p):
                        mean[c * p + f] += X[i, f]
                        gsum[f] += X[i, f]
                for c in range(C):
                    if count[c] > 0:
                        for f in range(p):
                            mean[c * p + f] /= count[c]
                for i in range(n):
                    if folds[i] == fold:
                        continue
                    c = y[i]
                    for f in range(p):
                        diff = X[i, f] - mean[c * p + f]
                        var[c * p + f] += diff * diff
                        diff = X[i, f] - gsum[f] / ntrain
                        gsq[f] += diff * diff
                for f in range(p):
                    gv = gsq[f] / ntrain
                    floor_ = var_smoothing * (gv + 1e-12)
                    for c in range(C):
                        if count[c] > 0:
                            var[c * p + f] = var[c * p + f] / count[c]
                        if var[c * p + f] < floor_:
                            var[c * p + f] = floor_
                for c in range(C):
                    if count[c] > 0:
                        logprior[c] = log(<double> count[c] / ntrain)
                for i in range(n):
                    if folds[i] != fold:
                        continue
                    best = -1
                    bs = 0.0
                    for c in range(C):
                        if count[c] == 0:
                            continue
                        s = _gauss_nb_score(&X[i, 0], &mean[c * p], &var[c * p], p, logprior[c])
                        if best < 0 or s > bs:
                            best = c
                            bs = s
                    conf[y[i], best] += 1
    finally:
        free(mean); free(var); free(gsum); free(gsq); free(logprior); free(count)
    return confusion


cdef int _cholesky(double* a, Py_ssize_t p) noexcept nogil:
    # in-place lower Cholesky of a row-major p x p matrix; returns 0 on success
    cdef Py_ssize_t i, j, m
    cdef double s
    for j in range(p):
        s = a[j * p + j]
        for m in range(j):
            s = s - a[j * p + m] * a[j * p + m]
        if s <= 0.0:
            return 1
        a[j * p + j] = sqrt(s)
        for i in range(j + 1, p):
            s = a[i * p + j]
            for m in range(j):
                s = s - a[i * p + m] * a[j * p + m]
            a[i * p + j] = s / a[j * p + j]
    return 0


def full_cv_confusion(const double[:, ::1] X, const long[::1] y, const long[::1] folds,
                      int k, int n_classes, double reg):
    """Pooled confusion counts of the full-covariance Gaussian Bayes classifier."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t C = n_classes
    cdef Py_ssize_t i, f, g, c, fold, best, m
    cdef double gv, s, bs, t, mahal
    cdef long ntrain
    cdef int failed = 0
    confusion = np.zeros((C, C), dtype=np.int64)
    cdef long[:, ::1] conf = confusion
    cdef double* mean = <double*> malloc(C * p * sizeof(double))
    cdef double* cov = <double*> malloc(C * p * p * sizeof(double))
    cdef double* gsum = <double*> malloc(p * sizeof(double))
    cdef double* gsq = <double*> malloc(p * sizeof(double))
    cdef double* logconst = <double*> malloc(C * sizeof(double))
    cdef double* r = <double*> malloc(p * sizeof(double))
    cdef long* count = <long*> malloc(C * sizeof(long))
    if (mean == NULL or cov == NULL or gsum == NULL or gsq == NULL or logconst == NULL
            or r == NULL or count == NULL):
        free(mean); free(cov); free(gsum); free(gsq); free(logconst); free(r); free(count)
        raise MemoryError()
    try:
        with nogil:
            for fold in range(k):
                for c in range(C):
                    count[c] = 0
                    for f in range(p):
                        mean[c * p + f] = 0.0
                    for f in range(p * p):
                        cov[c * p * p + f] = 0.0
                for f in range(p):
                    gsum[f] = 0.0
                    gsq[f] = 0.0
                ntrain = 0
                for i in range(n):
                    if folds[i] == fold:
                        continue
                    c = y[i]
                    count[c] += 1
                    ntrain += 1
                    for f in range(p):
                        mean[c * p + f] += X[i, f]
                        gsum[f] += X[i, f]
                for c in range(C):
                    if count[c] > 0:
                        for f in range(p):
                            mean[c * p + f] /= count[c]
                for i in range(n):
                    if folds[i] == fold:
                        continue
                    c = y[i]
                    for f in range(p):
                        r[f] = X[i, f] - mean[c * p + f]
                        t = X[i, f] - gsum[f] / ntrain
                        gsq[f] += t * t
                    for f in range(p):
                        for g in range(f + 1):
                            cov[c * p * p + f * p + g] += r[f] * r[g]
                for c in range(C):
                    if count[c] == 0:
                        continue
                    for f in range(p):
                        for g in range(f + 1):
                            cov[c * p * p + f * p + g] /= count[c]
                            cov[c * p * p + g * p + f] = cov[c * p * p + f * p + g]
                    for f in range(p):
                        gv = gsq[f] / ntrain
                        cov[c * p * p + f * p + f] += reg * (gv + 1e-12)
                    if _cholesky(&cov[c * p * p], p) != 0:
                        failed = 1
                        break
                    s = 0.0
                    for f in range(p):
                        s = s + log(cov[c * p * p + f * p + f])
                    logconst[c] = log(<double> count[c] / ntrain) - s - 0.5 * p * log(2.0 * M_PI)
                if failed:
                    break
                for i in range(n):
                    if folds[i] != fold:
                        continue
                    best = -1
                    bs = 0.0
                    for c in range(C):
                        if count[c] == 0:
                            continue
                        # forward substitution L r = x - mean
                        mahal = 0.0
                        for f in range(p):
                            t = X[i, f] - mean[c * p + f]
                            for m in range(f):
                                t = t - cov[c * p * p + f * p + m] * r[m]
                            r[f] = t / cov[c * p * p + f * p + f]
                            mahal = mahal + r[f] * r[f]
                        s = logconst[c] - 0.5 * mahal
                        if best < 0 or s > bs:
                            best = c
                            bs = s
                    conf[y[i], best] += 1
    finally:
        free(mean); free(cov); free(gsum); free(gsq); free(logconst); free(r); free(count)
    if failed:
        raise ValueError("class covariance is not positive definite")
    return confusion
