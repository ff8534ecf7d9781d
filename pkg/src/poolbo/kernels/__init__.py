"""Hot kernel primitives with backend selection at import.

The compiled extension is preferred when present; the NumPy implementation
is the fallback. ``POOLBO_NO_NATIVE=1`` forces the fallback (used by the
backend-agreement tests and the benchmark).
"""

import os

from . import _numpy

if os.environ.get("POOLBO_NO_NATIVE") == "1":
    _impl = _numpy
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _numpy

BACKEND = _impl.BACKEND
pairwise_sq_dists = _impl.pairwise_sq_dists
cross_sq_dists = _impl.cross_sq_dists
matern52 = _impl.matern52
matern52_k_rc = _impl.matern52_k_rc

numpy_backend = _numpy


def native_backend():
    """Return the compiled module, or None if it is not built."""
    try:
        from . import _native
    except ImportError:
        return None
    return _native
