"""Per-event numerical kernels with a compiled and a pure-numpy backend.

The compiled extension is used when it imports; otherwise the numpy
fallback is selected. ``REMSIM_KERNELS=python`` (or ``cython``) forces a
backend at import time, and :func:`set_backend` switches at runtime.
Callers must go through this module's attributes (``kernels.sample_logits``)
so a switch takes effect everywhere.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_NAMES = ("standardize_columns", "sample_logits", "softmax", "twopath_update", "weighted_gram")

BACKEND = None


def available():
    return ("cython", "python") if _ckernels is not None else ("python",)


def set_backend(name):
    """Select ``"cython"``, ``"python"`` or ``"auto"``; returns the active name."""
    global BACKEND
    if name == "auto":
        name = "cython" if _ckernels is not None else "python"
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .` to compile")
        mod = _ckernels
    elif name == "python":
        mod = _pykernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    g = globals()
    for fn in _NAMES:
        g[fn] = getattr(mod, fn)
    BACKEND = name
    return name


set_backend(os.environ.get("REMSIM_KERNELS", "auto"))
