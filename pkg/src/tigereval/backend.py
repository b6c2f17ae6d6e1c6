"""Kernel backend selection.

The compiled extension is preferred; set ``TIGEREVAL_PURE_PYTHON=1`` to
force the NumPy fallback. Both expose the same functions (see
``_kernels_py``). ``kernels.name`` tells which one is active.
"""

import os

from . import _kernels_py

if os.environ.get("TIGEREVAL_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

backend_name: str = kernels.name
