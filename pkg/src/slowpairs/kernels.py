"""Select the compiled kernel if it was built, else the pure-Python one.

Set ``SLOWPAIRS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("SLOWPAIRS_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

dead_time_filter = _impl.dead_time_filter
count_offset_matches = _impl.count_offset_matches
dense_gated_detector = _impl.dense_gated_detector

__all__ = ["BACKEND", "dead_time_filter", "count_offset_matches", "dense_gated_detector"]
