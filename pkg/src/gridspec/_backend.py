"""Pick the integration kernel at import: compiled if available, else pure Python.

Set ``GRIDSPEC_BACKEND=python`` to force the fallback.
"""
import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

KERNELS = {"python": _kernel_py}
if _compiled is not None:
    KERNELS["compiled"] = _compiled

if os.environ.get("GRIDSPEC_BACKEND", "").lower() == "python" or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"


def get_kernel(name=None):
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available (have {sorted(KERNELS)})") from None
