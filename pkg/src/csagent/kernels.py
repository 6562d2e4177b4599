"""Kernel dispatch: the compiled extension when it is importable, else Python.

Set ``CSAGENT_PURE_PYTHON=1`` to force the fallback.
"""
import os
from types import ModuleType

from . import _pykernels

try:
    if os.environ.get("CSAGENT_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_impl = BACKENDS[BACKEND]

core_alive = _impl.core_alive
truss_alive = _impl.truss_alive
min_cut = _impl.min_cut
max_clique = _impl.max_clique


def get_backend(name: str) -> ModuleType:
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}"
        ) from None
