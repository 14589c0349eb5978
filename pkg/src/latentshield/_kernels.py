"""Backend selection for the special-function kernels.

The compiled extension is used when it imports; setting
``LATENTSHIELD_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _gamma_py

if os.environ.get("LATENTSHIELD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _gamma_py
else:
    try:
        from . import _gamma_ext as _impl
    except ImportError:
        _impl = _gamma_py

BACKEND = "compiled" if _impl is not _gamma_py else "python"

log_gamma = _impl.log_gamma
gamma_p = _impl.gamma_p
gamma_p_inv = _impl.gamma_p_inv
gamma_p_array = _impl.gamma_p_array
gamma_p_inv_array = _impl.gamma_p_inv_array

__all__ = [
    "BACKEND",
    "log_gamma",
    "gamma_p",
    "gamma_p_inv",
    "gamma_p_array",
    "gamma_p_inv_array",
]
