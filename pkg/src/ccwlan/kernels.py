"""Kernel backend selection.

The compiled extension is used when it was built; otherwise (or when
``CCWLAN_PURE_PYTHON=1`` is set) the numpy implementations are used.
"""
import os

from . import _kernels_py

if os.environ.get("CCWLAN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND
family_scores = _impl.family_scores
pareto_mask = _impl.pareto_mask
