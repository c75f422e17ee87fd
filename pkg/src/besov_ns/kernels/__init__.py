"""Per-frequency kernels with a compiled backend when available.

``BACKEND`` is ``"cython"`` or ``"numpy"``. Setting ``BESOV_NS_PURE=1`` in the
environment forces the numpy fallback. All kernels take flat contiguous arrays;
the wrappers here reshape to and from the lattice shape.
"""
import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "numpy"
if os.environ.get("BESOV_NS_PURE") != "1":
    try:
        from . import _ckernels

        _impl = _ckernels
        BACKEND = "cython"
    except ImportError:
        pass


def green_entries(r, t: float, nu: float, backend=None):
    impl = _select(backend)
    shape = np.shape(r)
    r = np.ascontiguousarray(r, dtype=float)
    out = impl.green_entries(r.ravel(), float(t), float(nu))
    return tuple(np.asarray(g).reshape(shape) for g in out)


def smooth_ramp(s, backend=None):
    impl = _select(backend)
    shape = np.shape(s)
    s = np.ascontiguousarray(s, dtype=float)
    return np.asarray(impl.smooth_ramp(s.ravel())).reshape(shape)


def apply_2x2(m11, m12, m21, m22, a, d, backend=None):
    """Return ``(m11 a + m12 d, m21 a + m22 d)`` elementwise."""
    impl = _select(backend)
    shape = a.shape
    flat = [np.ascontiguousarray(x, dtype=float).ravel() for x in (m11, m12, m21, m22)]
    ca = np.ascontiguousarray(a, dtype=np.complex128).ravel()
    cd = np.ascontiguousarray(d, dtype=np.complex128).ravel()
    oa, od = impl.apply_2x2(*flat, ca, cd)
    return np.asarray(oa).reshape(shape), np.asarray(od).reshape(shape)


def _select(backend):
    if backend is None:
        return _impl
    if backend == "numpy":
        return _pykernels
    if backend == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled kernels are not built")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")
