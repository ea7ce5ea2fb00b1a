"""Hot solver kernels: compiled extension when available, numpy fallback
otherwise.

Set ``LIGHTPOS_PURE_PY=1`` to force the fallback (used by the kernel
benchmark and for debugging).
"""

import os

from . import _ref

if os.environ.get("LIGHTPOS_PURE_PY"):
    _impl = _ref
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _ref

solve_single = _impl.solve_single
BACKEND = "cython" if _impl is not _ref else "python"

__all__ = ["solve_single", "BACKEND"]
