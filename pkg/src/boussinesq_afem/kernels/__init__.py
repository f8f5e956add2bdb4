"""Hot element-batch kernels with a compiled core and a numpy fallback.

The compiled extension is selected at import when available; set
BOUSSINESQ_AFEM_PURE_PY=1 to force the numpy fallback.  Both backends share
the same contract and are cross-checked in the test suite.
"""

import os

from . import _fallback

if os.environ.get("BOUSSINESQ_AFEM_PURE_PY") == "1":
    _impl = _fallback
    _backend = "fallback"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        _backend = "compiled"
    except ImportError:
        _impl = _fallback
        _backend = "fallback"

grad_grad = _impl.grad_grad
mass = _impl.mass
scaled_mass = _impl.scaled_mass
transport = _impl.transport
transport_dual = _impl.transport_dual
div_blocks = _impl.div_blocks
load = _impl.load
sq_norm = _impl.sq_norm


def active_backend() -> str:
    """Name of the kernel backend in use: 'compiled' or 'fallback'."""
    return _backend
