"""Hot-loop kernels: compiled extension when available, numpy fallback otherwise.

``fdtd_step`` is selected at import time; force the fallback with
``SOUNDFIELD_NO_EXT=1`` (used by the backend-equivalence tests and the
benchmark).
"""

import os

from . import fallback

if os.environ.get("SOUNDFIELD_NO_EXT"):
    _impl = fallback
else:
    try:
        from . import _fdtd as _impl
    except ImportError:
        _impl = fallback

fdtd_step = _impl.fdtd_step
BACKEND = _impl.BACKEND

__all__ = ["fdtd_step", "BACKEND", "fallback"]
