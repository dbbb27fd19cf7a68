"""Pick the compiled series kernel when it was built, else the numpy twin.

Set ``PTSCAT_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

NAME = "python"
hyp_series = _fallback.hyp_series

if os.environ.get("PTSCAT_BACKEND", "").lower() != "python":
    try:
        from . import _accel
    except ImportError:  # extension not built
        pass
    else:
        NAME = "cython"
        hyp_series = _accel.hyp_series
