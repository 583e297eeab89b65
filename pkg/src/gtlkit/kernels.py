"""Kernel selection: compiled extension when built, pure Python otherwise.

Set ``GTL_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and the differential tests).
"""

from __future__ import annotations

import os

if os.environ.get("GTL_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

IMPLEMENTATION = _impl.IMPLEMENTATION
pair_sensible = _impl.pair_sensible
sensible_matrix = _impl.sensible_matrix
