"""Pure-Python implementations of the sequential kernels."""
import numpy as np


def dead_time_filter(candidates, dead_gates, next_free):
    """Keep candidate firings that fall outside the dead window of the previous kept one.

    ``candidates`` are sorted, unique gate indices. ``next_free`` is the first
    gate at which the detector is armed; it is returned updated so that
    consecutive blocks can be chained.
    """
    mask = np.zeros(len(candidates), dtype=bool)
    step = int(dead_gates) + 1
    nf = int(next_free)
    for i, c in enumerate(candidates.tolist()):
        if c >= nf:
            mask[i] = True
            nf = c + step
    return mask, nf


def count_offset_matches(a, b, offset):
    """Number of ``t`` in ``a`` with ``t + offset`` in ``b`` (both sorted, unique)."""
    shifted = a + offset
    idx = np.searchsorted(b, shifted)
    ok = idx < len(b)
    return int(np.count_nonzero(b[idx[ok]] == shifted[ok]))


def dense_gated_detector(uniforms, p, dead_gates, dead_remaining):
    """Gate-by-gate detector: an armed gate fires when its uniform is below ``p``.

    Returns ``(fires, active_gates, dead_remaining)``. Equivalent to walking the
    gates one by one; the walk is done over the sub-threshold gates only.
    """
    n = len(uniforms)
    candidates = np.flatnonzero(uniforms < p).astype(np.int64)
    mask, next_free = dead_time_filter(candidates, dead_gates, int(dead_remaining))
    fired = candidates[mask]
    blanked = min(int(dead_remaining), n)
    blanked += int(np.minimum(dead_gates, n - 1 - fired).sum())
    return int(len(fired)), n - blanked, max(0, next_free - n)
