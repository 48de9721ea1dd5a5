"""Kernel backend selection.

The compiled extension is used when it imports; set ``DCCT_PURE_PYTHON=1`` to
force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("DCCT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

k_reciprocal_expanded = _impl.k_reciprocal_expanded
jaccard_sparse = _impl.jaccard_sparse
dbscan_expand = _impl.dbscan_expand

__all__ = ["BACKEND", "k_reciprocal_expanded", "jaccard_sparse", "dbscan_expand"]
