"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or when DWEULER_BACKEND=numpy is set.  Both backends
produce bit-identical results (see tests/test_kernels.py).
"""

import os

from . import numpy_backend

_choice = os.environ.get("DWEULER_BACKEND", "").strip().lower()

if _choice == "numpy":
    backend = numpy_backend
else:
    try:
        from . import _cykernels as backend  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
        backend = numpy_backend

BACKEND_NAME = backend.NAME

max_wave_speed = backend.max_wave_speed
lf_step = backend.lf_step
vfv_step = backend.vfv_step
