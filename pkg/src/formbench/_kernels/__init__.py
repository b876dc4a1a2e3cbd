"""Layout-SGD kernel selection: compiled extension with pure-Python fallback.

Set FORMBENCH_PURE_PYTHON=1 to force the fallback (mainly for tests and the
backend-comparison benchmark).  Both backends implement identical arithmetic,
so the choice affects speed only.
"""

from __future__ import annotations

import os

if os.environ.get("FORMBENCH_PURE_PYTHON"):
    from .sgd_fallback import optimize_layout

    BACKEND = "python"
else:
    try:
        from ._sgd import optimize_layout  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from .sgd_fallback import optimize_layout

        BACKEND = "python"

__all__ = ["optimize_layout", "BACKEND"]
