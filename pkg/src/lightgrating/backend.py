"""Selects the compiled kernel module at import time, with a pure fallback.

The compiled extension (``lightgrating._kernels``, built from Cython) and the
NumPy module ``lightgrating._kernels_py`` implement the same three functions.
Whichever is available is re-exported here; setting the environment variable
``LIGHTGRATING_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("LIGHTGRATING_PURE_PYTHON", "") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

sample_channels = _impl.sample_channels
accumulate_weighted_abs2 = _impl.accumulate_weighted_abs2
direct_fresnel_sum = _impl.direct_fresnel_sum


def backend_name() -> str:
    """Either ``"compiled"`` or ``"python"``."""
    return _impl.BACKEND_NAME
