"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when importable; otherwise the
pure-Python ``_pycore`` fallback. Set ``RIDEPOOL_BACKEND=python`` to force
the fallback.
"""

import os

from . import _pycore

if os.environ.get("RIDEPOOL_BACKEND", "").lower() == "python":
    _impl = _pycore
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pycore

BACKEND = "python" if _impl is _pycore else "compiled"

dijkstra = _impl.dijkstra
all_pairs = _impl.all_pairs
FleetKernel = _impl.FleetKernel


def backends():
    """Available ``{name: module}`` pairs, for benchmarks and equivalence tests."""
    out = {"python": _pycore}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        out["compiled"] = _core
    return out
