"""Select the split-search kernel at import time.

Set ``CALLPAIR_PURE_PYTHON=1`` to force the numpy fallback even when the
compiled extension is available.
"""

import os

if os.environ.get("CALLPAIR_PURE_PYTHON", "").strip() not in ("", "0"):
    from ._splitter_py import level_best_splits

    BACKEND = "python"
else:
    try:
        from ._splitter import level_best_splits

        BACKEND = "cython"
    except ImportError:
        from ._splitter_py import level_best_splits

        BACKEND = "python"

__all__ = ["BACKEND", "level_best_splits"]
