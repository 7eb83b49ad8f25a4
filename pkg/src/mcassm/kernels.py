"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``MCASSM_PURE_PYTHON=1`` to force the numpy versions.
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("MCASSM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py


def nearest(z, points):
    import numpy as np

    return _impl.nearest(
        np.ascontiguousarray(z, dtype=complex), np.ascontiguousarray(points, dtype=complex)
    )


def bit_errors(a, b):
    import numpy as np

    return _impl.bit_errors(
        np.ascontiguousarray(a, dtype=np.int64), np.ascontiguousarray(b, dtype=np.int64)
    )
