"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
kernels take over. Set ``SJPC_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os
import warnings

from . import _pykernels

python = _pykernels
compiled = None

if os.environ.get("SJPC_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        warnings.warn("sjpc: compiled kernels unavailable, using the pure-Python fallback",
                      RuntimeWarning, stacklevel=2)

kernels = compiled if compiled is not None else python
BACKEND = kernels.NAME
