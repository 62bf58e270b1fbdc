"""Rasterizer backend selection.

Two interchangeable kernel implementations exist: the Cython extension
``_kernels`` (built at install time) and the pure-numpy ``_npkernels``.
The extension is preferred when importable; set SATSPLAT_BACKEND to
"compiled" or "numpy" to force one, or "auto" for the default.
"""

import os

from . import _npkernels

_ENV_VAR = "SATSPLAT_BACKEND"
_CHOICES = ("auto", "compiled", "numpy")


def load_backend(name="auto"):
    """Resolve a backend name to its kernel module.

    "auto" honors the SATSPLAT_BACKEND environment variable, then prefers
    the compiled extension, then falls back to numpy.
    """
    if name == "auto":
        name = os.environ.get(_ENV_VAR, "auto")
    if name not in _CHOICES:
        raise ValueError("backend must be one of %s, got %r" % (_CHOICES, name))
    if name == "numpy":
        return _npkernels
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        if name == "compiled":
            raise
        return _npkernels


def backend_name(module):
    return "compiled" if module.__name__.endswith("_kernels") else "numpy"
