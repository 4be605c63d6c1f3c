"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the numpy
fallback is used. Setting ``COALSEL_BACKEND=python`` forces the fallback.
"""

import logging
import os

from coalsel import _pykernels

log = logging.getLogger(__name__)

BACKEND = "python"
kernels = _pykernels

if os.environ.get("COALSEL_BACKEND", "").lower() != "python":
    try:
        from coalsel import _ckernels
    except ImportError:  # pragma: no cover - depends on build
        log.debug("compiled kernels unavailable; using numpy fallback")
    else:
        kernels = _ckernels
        BACKEND = "cython"


def get_kernels(name=None):
    """Return the kernel module for ``name`` ("cython" or "python"), or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from coalsel import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}; expected 'cython' or 'python'")
