"""Backend dispatch for the image-processing kernels.

Two interchangeable implementations exist: a numba-jitted one
(``_numba_impl``) and a vectorized numpy/scipy one (``_numpy_impl``).
Both use exact integer arithmetic and produce bit-identical results.

The backend is chosen once at import time from the ``CTSTD_BACKEND``
environment variable: ``numba`` (require numba), ``numpy`` (force the
fallback), or ``auto`` (default: numba when importable, numpy otherwise).
"""
import os

BACKEND_ENV = "CTSTD_BACKEND"


def _pick_backend():
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower() or "auto"
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{BACKEND_ENV} must be 'auto', 'numba' or 'numpy', got {choice!r}"
        )
    if choice == "numpy":
        from . import _numpy_impl as impl

        return impl, "numpy"
    try:
        from . import _numba_impl as impl

        return impl, "numba"
    except ImportError:
        if choice == "numba":
            raise
        from . import _numpy_impl as impl

        return impl, "numpy"


_impl, ACTIVE_BACKEND = _pick_backend()

mean_filter = _impl.mean_filter
binary_opening = _impl.binary_opening
remove_small_components = _impl.remove_small_components


def get_backend() -> str:
    """Name of the backend selected at import time."""
    return ACTIVE_BACKEND
