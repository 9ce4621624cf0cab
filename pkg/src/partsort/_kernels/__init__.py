"""Hot kernels: compiled (Cython) when available, numpy fallback otherwise.

Set ``PARTSORT_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
backend chosen at import.
"""

import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"

if os.environ.get("PARTSORT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def _u64(a):
    return np.ascontiguousarray(a, dtype=np.uint64)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def lex_searchsorted(keys, tags, pkeys, ptags, right=True, impl=None):
    """Insertion points of probe pairs into a lexicographically sorted pair array."""
    impl = impl or _impl
    return impl.lex_searchsorted(_u64(keys), _u64(tags), _u64(pkeys), _u64(ptags), bool(right))


def seg_searchsorted(keys, tags, offsets, pkeys, ptags, right=True, impl=None):
    """Per-segment insertion points; row ``q`` is relative to ``offsets[q]``."""
    impl = impl or _impl
    return impl.seg_searchsorted(_u64(keys), _u64(tags), _i64(offsets),
                                 _u64(pkeys), _u64(ptags), bool(right))


def merge_runs(keys, tags, offsets, impl=None):
    impl = impl or _impl
    return impl.merge_runs(_u64(keys), _u64(tags), _i64(offsets))


def available_backends():
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
