"""Compiled vs numpy-fallback kernel timings.

    python benchmarks/bench_kernels.py [--repeat 5]

Times a 6-level decomposition, a round trip through the inverse, and the
cross-validated confusion of both classifiers on 4-feature subsets (the shape
the Shapley estimator evaluates thousands of times).
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from coalsel._backend import get_kernels
from coalsel.classifier import COV_SMOOTHING, VAR_SMOOTHING
from coalsel.dataset import make_rng, stratified_kfold
from coalsel.wavelet import dwt_multilevel, get_filter, idwt_multilevel


def cases(backend: str, rng):
    x = rng.standard_normal(4096)
    db8 = get_filter("db8")
    decomp = dwt_multilevel(x, db8, 6, "symmetric", backend=backend)
    kern = get_kernels(backend)
    X = np.ascontiguousarray(rng.standard_normal((500, 4)))
    y = np.repeat(np.arange(2, dtype=np.int64), 250)
    folds = np.ascontiguousarray(stratified_kfold(y, 5, 0).fold_assignments)
    return {
        "dwt db8 n=4096 depth=6 symmetric": lambda: dwt_multilevel(x, db8, 6, "symmetric", backend=backend),
        "idwt db8 n=4096 depth=6 symmetric": lambda: idwt_multilevel(decomp, db8, backend=backend),
        "naive-bayes 5-fold CV, 500x4": lambda: kern.nb_cv_confusion(X, y, folds, 5, 2, VAR_SMOOTHING),
        "full-covariance 5-fold CV, 500x4": lambda: kern.full_cv_confusion(X, y, folds, 5, 2, COV_SMOOTHING),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        from coalsel import _ckernels  # noqa: F401
    except ImportError:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    timings = {}
    for backend in ("cython", "python"):
        for name, fn in cases(backend, make_rng(0)).items():
            number, _ = timeit.Timer(fn).autorange()
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            timings.setdefault(name, {})[backend] = best
    print(f"{'case':<36} {'cython':>12} {'python':>12} {'speedup':>8}")
    for name, t in timings.items():
        print(f"{name:<36} {t['cython'] * 1e6:>10.1f}us {t['python'] * 1e6:>10.1f}us "
              f"{t['python'] / t['cython']:>7.1f}x")


if __name__ == "__main__":
    main()
