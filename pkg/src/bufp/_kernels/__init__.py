"""Tree-traversal kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; set ``BUFP_PURE_PYTHON=1``
to force the fallback. ``BACKEND`` names the module in use.
"""

from __future__ import annotations

import os

from . import _fallback

fallback = _fallback

if os.environ.get("BUFP_PURE_PYTHON", "") not in ("", "0"):
    backend = _fallback
else:
    try:
        from . import _core as backend
    except ImportError:
        backend = _fallback

BACKEND = "compiled" if backend is not _fallback else "python"

try:
    from . import _core as compiled
except ImportError:
    compiled = None

__all__ = ["BACKEND", "backend", "compiled", "fallback"]
