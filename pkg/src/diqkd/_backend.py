"""Select the compiled kernels when available, else the numpy fallback.

Set ``DIQKD_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by the backend-parity tests).
"""
import os

from . import _fallback

_compiled = None
if not os.environ.get("DIQKD_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

if _compiled is not None:
    jacobi_eigh = _compiled.jacobi_eigh
    sample_rounds = _compiled.sample_rounds
    BACKEND = "compiled"
else:
    jacobi_eigh = _fallback.jacobi_eigh
    sample_rounds = _fallback.sample_rounds
    BACKEND = "python"


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    out = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["compiled"] = _kernels
    return out
