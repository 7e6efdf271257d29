"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise, or when
``MOBILE_WBC_PURE_PYTHON=1`` is set in the environment, the numpy versions in
``_kernels_py`` are used.  Both expose the same four functions.
"""
import os

from . import _kernels_py

kernels_py = _kernels_py

try:
    from . import _kernels as kernels_c
except ImportError:  # extension not built
    kernels_c = None

if kernels_c is not None and os.environ.get("MOBILE_WBC_PURE_PYTHON") != "1":
    kernels = kernels_c
    BACKEND = "compiled"
else:
    kernels = kernels_py
    BACKEND = "python"
