"""Backend selection for the trajectory kernel.

The compiled extension is used when importable; set ``QJPD_PURE_PYTHON=1``
to force the fallback. Both backends are bit-identical.
"""

import os

from . import _pytrajectory

try:
    if os.environ.get("QJPD_PURE_PYTHON"):
        raise ImportError("forced pure-Python backend")
    from . import _trajectory as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _pytrajectory}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
kernel = BACKENDS[BACKEND]


def get_kernel(name=None):
    if name is None:
        return kernel
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
