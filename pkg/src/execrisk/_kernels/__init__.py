"""Simulation kernels: compiled extension when built, numpy fallback otherwise.

Set ``EXECRISK_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS = {"python": _pykernel}
if _ckernel is not None:
    BACKENDS["cython"] = _ckernel

if os.environ.get("EXECRISK_BACKEND", "").lower() == "python" or _ckernel is None:
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "cython"


def get_backend(name=None):
    name = DEFAULT_BACKEND if name is None else name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
