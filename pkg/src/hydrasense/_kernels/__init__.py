"""Hot numeric kernels: compiled fast path with a NumPy fallback.

The Cython extension ``_native`` is optional.  When it is missing, or when
the environment variable ``HYDRASENSE_PURE_PY=1`` is set, the NumPy
implementations in ``_numpy`` are used instead.  Both backends implement
the same deterministic algorithms (identical update order and tie-breaks),
so results do not depend on which one is active.
"""

import os

from hydrasense._kernels import _numpy as numpy_backend

if os.environ.get("HYDRASENSE_PURE_PY") == "1":
    _impl = numpy_backend
else:
    try:
        from hydrasense._kernels import _native as _impl
    except ImportError:
        _impl = numpy_backend

BACKEND = "native" if _impl is not numpy_backend else "numpy"

knn_predict = _impl.knn_predict
smo_solve = _impl.smo_solve
best_split = _impl.best_split

__all__ = ["BACKEND", "knn_predict", "smo_solve", "best_split", "numpy_backend"]
