"""Backend selection for the compression kernels.

The compiled ``_ckernels`` extension is used when importable; setting
``CDT_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _pykernels

if os.environ.get("CDT_PURE_PYTHON", "") not in ("", "0"):
    impl = _pykernels
else:
    try:
        from . import _ckernels as impl
    except ImportError:  # extension not built
        impl = _pykernels

BACKEND = impl.BACKEND


def backends() -> dict:
    """All importable backends by name."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
