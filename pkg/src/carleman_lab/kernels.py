"""Backend selection for the hot kernels.

The compiled extension is used when it was built and importable; otherwise
the numpy implementation is used.  Setting ``CARLEMAN_LAB_PURE=1`` forces the
fallback.
"""

import os

from . import _trace_py

BACKEND = "python"
trace_backward = _trace_py.trace_backward

if os.environ.get("CARLEMAN_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _trace  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        trace_backward = _trace.trace_backward
        BACKEND = "cython"

python_trace_backward = _trace_py.trace_backward


def compiled_trace_backward():
    """The compiled tracer, or None when the extension is unavailable."""
    try:
        from . import _trace  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _trace.trace_backward
