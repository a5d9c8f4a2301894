"""Selects the gate-kernel implementation at import time.

The compiled extension is preferred; set ``DQRC_PURE_PYTHON=1`` to force the
numpy fallback (useful for benchmarking and debugging).  ``IMPLEMENTATION``
reports which one is active.
"""

from __future__ import annotations

import os

if os.environ.get("DQRC_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as _impl  # type: ignore[no-redef]

IMPLEMENTATION: str = _impl.IMPLEMENTATION

apply_rx = _impl.apply_rx
apply_rz = _impl.apply_rz
apply_h = _impl.apply_h
apply_phase = _impl.apply_phase
apply_cnot = _impl.apply_cnot
expval_z = _impl.expval_z
