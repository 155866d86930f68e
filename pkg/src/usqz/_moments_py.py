"""Pure-numpy fallback for the sliding-window moment sums.

Same padding semantics as the compiled kernel (wrap in theta, clamp in r).
Summation order differs at the floating-point level (numpy uses pairwise
summation), so cross-backend agreement is to ~1e-12 relative, not bit-exact;
each backend is individually deterministic.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def window_moment_sums(amp: np.ndarray, window: int):
    """Return (s1, s2, s4): per-pixel window sums of x, x^2 and x^4."""
    amp = np.ascontiguousarray(amp, dtype=np.float64)
    half = window // 2
    padded = np.pad(amp, ((half, half), (0, 0)), mode="edge")
    padded = np.pad(padded, ((0, 0), (half, half)), mode="wrap")
    out = []
    for power in (1, 2, 4):
        views = sliding_window_view(padded ** power, (window, window))
        out.append(views.sum(axis=(-2, -1)))
    return tuple(out)
