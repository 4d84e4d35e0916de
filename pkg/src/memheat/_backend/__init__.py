"""Backend selection: compiled extension when available, NumPy otherwise.

Set MEMHEAT_PURE_PYTHON=1 to force the NumPy implementation.
"""
import os

if os.environ.get("MEMHEAT_PURE_PYTHON") == "1":
    from . import _mlcore_py as core
else:
    try:
        from . import _mlcore as core  # type: ignore[attr-defined]
    except ImportError:
        from . import _mlcore_py as core

ml_neg = core.ml_neg
BACKEND = core.BACKEND


def backend_name():
    return BACKEND
