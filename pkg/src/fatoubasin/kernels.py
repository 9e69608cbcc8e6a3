"""Kernel selector.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` module stands in.  Setting the environment variable
``FATOUBASIN_PURE=1`` forces the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("FATOUBASIN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

chain_apply = _impl.chain_apply
iterate_many = _impl.iterate_many
orbit = _impl.orbit
classify_many = _impl.classify_many
in_dprime_certified = _impl.in_dprime_certified
mu0 = _impl.mu0

CODE_UNDECIDED = _pykernels.CODE_UNDECIDED
CODE_BASIN_DPRIME = _pykernels.CODE_BASIN_DPRIME
CODE_BASIN_D = _pykernels.CODE_BASIN_D
CODE_ON_CURVE = _pykernels.CODE_ON_CURVE
CODE_AXIS = _pykernels.CODE_AXIS


def backends():
    """Mapping ``name -> module`` of every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out
