"""Backend selection for the density-matrix right-hand side.

The compiled extension is used when it imports; setting
``CAVITYHALL_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _numpy
from ._numpy import COHERENT, DISSIPATIVE, FLUCTUATION

ALL_PARTS = COHERENT | DISSIPATIVE | FLUCTUATION

_ext = None
if os.environ.get("CAVITYHALL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _rhs_ext as _ext
    except ImportError:  # extension not built
        _ext = None

if _ext is not None:
    BACKEND = "compiled"
    density_rhs = _ext.density_rhs
    cavity_drive = _ext.cavity_drive
else:
    BACKEND = "numpy"
    density_rhs = _numpy.density_rhs
    cavity_drive = _numpy.cavity_drive

__all__ = [
    "ALL_PARTS",
    "BACKEND",
    "COHERENT",
    "DISSIPATIVE",
    "FLUCTUATION",
    "cavity_drive",
    "density_rhs",
]
