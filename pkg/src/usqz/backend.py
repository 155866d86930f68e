"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set ``USQZ_BACKEND=python`` to force the pure-numpy path (used by the
benchmark and the backend-agreement tests).
"""

from __future__ import annotations

import os

from . import _moments_py

if os.environ.get("USQZ_BACKEND", "").lower() == "python":
    _impl = _moments_py
    BACKEND = "python"
else:
    try:
        from . import _moments as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _moments_py
        BACKEND = "python"

window_moment_sums = _impl.window_moment_sums
