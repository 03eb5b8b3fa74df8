"""Selects the kernel backend.

Numba kernels are used when numba imports and ``S3DOA_DISABLE_NUMBA`` is
unset or falsy. Set ``S3DOA_DISABLE_NUMBA=1`` to force the pure-numpy path.
"""

import os

_FALSY = ("", "0", "false", "no", "off")

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and (
    os.environ.get("S3DOA_DISABLE_NUMBA", "").strip().lower() in _FALSY
)

BACKEND = "numba" if USE_NUMBA else "numpy"


def njit_opts():
    return dict(cache=True, nogil=True, fastmath=False, error_model="numpy")
