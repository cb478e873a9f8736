"""Backend selection for the propagation kernel.

The compiled extension is used when it imports; setting
``CPROBUST_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

import numpy as np

from . import _fallback

if os.environ.get("CPROBUST_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

qmul = _fallback.qmul
step_quaternions = _fallback.step_quaternions


def propagate_batch(amplitude, phase, dt, beta_a, beta_d, backend=None):
    """Dispatch to the compiled or fallback kernel (same signature and result)."""
    backend = backend or BACKEND
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (amplitude, phase, dt)]
    ba = np.ascontiguousarray(beta_a, dtype=np.float64)
    bd = np.ascontiguousarray(beta_d, dtype=np.float64)
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.propagate_batch(*args, ba, bd)
    if backend == "python":
        return _fallback.propagate_batch(*args, ba, bd)
    raise ValueError(f"unknown backend {backend!r}")
