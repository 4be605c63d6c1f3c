"""Multi-level 1-D discrete wavelet transform with Daubechies filters.

Conventions
-----------
For a filter of ``L`` taps with low-pass ``h`` and high-pass ``g``, one analysis
step over an extended input ``y`` computes::

    a[k] = sum_n h[n] * y[2k + n]
    d[k] = sum_n g[n] * y[2k + n]

``periodic`` extension wraps the input (odd lengths are first padded by
repeating the last sample), giving ``ceil(n / 2)`` coefficients per band and an
orthonormal transform on even lengths. ``symmetric`` extension reflects the
input about its ends (half-sample symmetry) and keeps the ``floor((n + L - 1)/2)``
coefficients needed for exact reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from coalsel._backend import get_kernels

BOUNDARY_MODES = ("periodic", "symmetric")
DEFAULT_DEPTH = 6
KNOWN_CHANNELS = ("ECG", "PLETH", "ABP")

# Low-pass (scaling) taps, h[0..L-1], normalized to sum sqrt(2).
# Obtained by minimum-phase spectral factorization of the Daubechies polynomial
# at 50-digit precision; they agree with Table 6.1 of I. Daubechies,
# "Ten Lectures on Wavelets" (SIAM, 1992) to every printed digit.
_DAUBECHIES_LOW_PASS = {
    4: (
        0.23037781330889650086,
        0.71484657055291564709,
        0.63088076792985890788,
        -0.027983769416859854211,
        -0.18703481171909308408,
        0.030841381835560763627,
        0.032883011666885199735,
        -0.010597401785069032105,
    ),
    8: (
        0.054415842243104009955,
        0.31287159091429997066,
        0.67563073629728980681,
        0.58535468365420671277,
        -0.015829105256349305667,
        -0.28401554296154692652,
        0.00047248457391328277036,
        0.12874742662047845886,
        -0.01736930100180754617,
        -0.044088253930794751507,
        0.013981027917398281649,
        0.0087460940474057767164,
        -0.0048703529934515743104,
        -0.0003917403733769470463,
        0.00067544940645056936637,
        -0.00011747678412476953373,
    ),
}


@dataclass(frozen=True)
class WaveletFilter:
    """Orthonormal two-channel filter pair."""

    name: str
    low_pass: np.ndarray = field(repr=False)
    high_pass: np.ndarray = field(repr=False)

    @property
    def taps(self) -> int:
        return len(self.low_pass)

    def validate(self, tol: float = 1e-12) -> None:
        """Raise ``ValueError`` if any filter invariant fails."""
        h, g = self.low_pass, self.high_pass
        N = len(h)
        if N % 2 or N != len(g):
            raise ValueError(f"{self.name}: tap count must be even and equal for both bands")
        if abs(np.sum(h * h) - 1.0) > tol:
            raise ValueError(f"{self.name}: low-pass taps are not unit-norm")
        if abs(np.sum(h) - math.sqrt(2.0)) > tol:
            raise ValueError(f"{self.name}: low-pass taps do not sum to sqrt(2)")
        mirror = np.array([(-1) ** k * h[N - 1 - k] for k in range(N)])
        if not np.array_equal(g, mirror):
            raise ValueError(f"{self.name}: high-pass is not the quadrature mirror of low-pass")


@dataclass(frozen=True)
class Signal:
    """One uniformly sampled channel."""

    channel: str
    samples: np.ndarray = field(repr=False)
    sample_rate: float = 1.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)  # copy: the caller keeps a writable array
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError(f"channel {self.channel}: samples must be a non-empty 1-D vector")
        bad = np.flatnonzero(~np.isfinite(samples))
        if bad.size:
            raise ValueError(f"channel {self.channel}: non-finite sample at index {bad[0]}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class WaveletDecomposition:
    """Detail vectors for levels 1..J plus the level-J approximation.

    ``lengths[j]`` is the length of the input to level ``j + 1``; the inverse
    needs it to undo odd-length padding.
    """

    details: tuple
    approximation: np.ndarray = field(repr=False)
    filter_name: str
    boundary_mode: str
    lengths: tuple

    @property
    def depth(self) -> int:
        return len(self.details)

    @property
    def levels(self) -> list:
        return [*self.details, self.approximation]

    def detail(self, level: int) -> np.ndarray:
        return self.details[level - 1]

    def coefficient_count(self) -> int:
        return sum(d.size for d in self.details) + self.approximation.size


def _make_filter(order: int) -> WaveletFilter:
    h = np.array(_DAUBECHIES_LOW_PASS[order], dtype=np.float64)
    N = len(h)
    g = np.array([(-1) ** k * h[N - 1 - k] for k in range(N)], dtype=np.float64)
    h.setflags(write=False)
    g.setflags(write=False)
    return WaveletFilter(f"db{order}", h, g)


_FILTERS = {order: _make_filter(order) for order in _DAUBECHIES_LOW_PASS}
for _f in _FILTERS.values():
    _f.validate()


def daubechies_filter(order: int) -> WaveletFilter:
    """Daubechies filter with ``order`` vanishing moments (``2 * order`` taps)."""
    if order not in _FILTERS:
        raise ValueError(f"unsupported Daubechies order {order}; supported: {sorted(_FILTERS)}")
    return _FILTERS[order]


def get_filter(name: str) -> WaveletFilter:
    """Look a filter up by name, e.g. ``"db4"``."""
    if not name.startswith("db") or not name[2:].isdigit():
        raise ValueError(f"unknown wavelet {name!r}; supported: {[f.name for f in _FILTERS.values()]}")
    return daubechies_filter(int(name[2:]))


def min_length(filt: WaveletFilter, depth: int) -> int:
    """Shortest input accepted for a ``depth``-level decomposition."""
    return max(filt.taps, 2**depth)


def _sym_index(m: np.ndarray, n: int) -> np.ndarray:
    r = np.mod(m, 2 * n)
    return np.where(r < n, r, 2 * n - 1 - r)


def _analysis_step(x, filt, boundary, kern):
    n = x.size
    L = filt.taps
    if boundary == "periodic":
        if n % 2:
            x = np.append(x, x[-1])
            n += 1
        K = n // 2
        idx = np.mod(np.arange(2 * (K - 1) + L), n)
    else:
        kmin = -(L // 2 - 1)
        kmax = (n - 1) // 2
        idx = _sym_index(np.arange(2 * kmin, 2 * kmax + L), n)
    x_ext = np.ascontiguousarray(x[idx])
    return kern.dwt_analysis(x_ext, filt.low_pass, filt.high_pass)


def _synthesis_step(a, d, n, filt, boundary, kern):
    L = filt.taps
    z = kern.dwt_synthesis(
        np.ascontiguousarray(a), np.ascontiguousarray(d), filt.low_pass, filt.high_pass
    )
    if boundary == "periodic":
        n_even = n + (n % 2)
        pad = (-z.size) % n_even
        x = np.pad(z, (0, pad)).reshape(-1, n_even).sum(axis=0)
        return x[:n]
    return z[L - 2 : L - 2 + n]


def _as_samples(signal) -> np.ndarray:
    if isinstance(signal, Signal):
        return signal.samples
    return Signal("other", signal).samples


def dwt_multilevel(
    signal,
    filt: WaveletFilter,
    depth: int = DEFAULT_DEPTH,
    boundary: str = "periodic",
    backend: str | None = None,
) -> WaveletDecomposition:
    """Decompose ``signal`` (a :class:`Signal` or 1-D array) into ``depth`` levels."""
    if boundary not in BOUNDARY_MODES:
        raise ValueError(f"unknown boundary mode {boundary!r}; expected one of {BOUNDARY_MODES}")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    x = _as_samples(signal)
    need = min_length(filt, depth)
    if x.size < need:
        raise ValueError(
            f"signal of length {x.size} is too short for a depth-{depth} {filt.name} "
            f"decomposition; need at least {need} samples"
        )
    kern = get_kernels(backend)
    details = []
    lengths = []
    a = x
    for _ in range(depth):
        lengths.append(a.size)
        a, d = _analysis_step(a, filt, boundary, kern)
        details.append(d)
    return WaveletDecomposition(tuple(details), a, filt.name, boundary, tuple(lengths))


def idwt_multilevel(
    decomp: WaveletDecomposition, filt: WaveletFilter, backend: str | None = None
) -> np.ndarray:
    """Invert :func:`dwt_multilevel`; returns the reconstructed samples."""
    if filt.name != decomp.filter_name:
        raise ValueError(
            f"filter mismatch: decomposition used {decomp.filter_name}, got {filt.name}"
        )
    kern = get_kernels(backend)
    a = np.asarray(decomp.approximation, dtype=np.float64)
    for d, n in zip(reversed(decomp.details), reversed(decomp.lengths)):
        d = np.asarray(d, dtype=np.float64)
        if d.size != a.size:
            raise ValueError("detail and approximation lengths disagree")
        a = _synthesis_step(a, d, n, filt, decomp.boundary_mode, kern)
    return a


def decomposition_shape(n: int, filt: WaveletFilter, depth: int, boundary: str = "periodic"):
    """Per-level input lengths and the coefficient count of each band."""
    lengths, sizes = [], []
    for _ in range(depth):
        lengths.append(n)
        if boundary == "periodic":
            n = (n + 1) // 2
        else:
            n = (n + filt.taps - 1) // 2
        sizes.append(n)
    return lengths, sizes
