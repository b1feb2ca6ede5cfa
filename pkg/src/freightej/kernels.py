"""Backend selection for the hot geometry kernels.

Set ``FREIGHTEJ_DISABLE_NUMBA=1`` before import to force the pure-numpy
path. If numba cannot be imported the numpy path is used as well.
"""

import os

from freightej import _kernels_numpy

_FLAG = "FREIGHTEJ_DISABLE_NUMBA"


def _numba_wanted():
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


if _numba_wanted():
    try:
        from freightej import _kernels_numba as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _kernels_numpy
        BACKEND = "numpy"
else:
    _impl = _kernels_numpy
    BACKEND = "numpy"

ring_signed_area = _impl.ring_signed_area
clip_ring_rect = _impl.clip_ring_rect
ring_cell_areas = _impl.ring_cell_areas
points_ring_location = _impl.points_ring_location

OUTSIDE, INSIDE, BOUNDARY = 0, 1, 2


def backends():
    """Map of available backend name -> kernel module (for tests and benchmarks)."""
    out = {"numpy": _kernels_numpy}
    try:
        from freightej import _kernels_numba
        out["numba"] = _kernels_numba
    except ImportError:  # pragma: no cover
        pass
    return out
