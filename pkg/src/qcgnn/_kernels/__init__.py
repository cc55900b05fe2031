"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled module is used when it was built at install time. Setting
``QCGNN_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names the active one.
"""
from __future__ import annotations

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("QCGNN_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

apply_matrix = _impl.apply_matrix
segment_softmax = _impl.segment_softmax
segment_softmax_backward = _impl.segment_softmax_backward
csr_matmul = _impl.csr_matmul
csr_matmul_t = _impl.csr_matmul_t
edge_dot = _impl.edge_dot

__all__ = [
    "BACKEND",
    "apply_matrix",
    "segment_softmax",
    "segment_softmax_backward",
    "csr_matmul",
    "csr_matmul_t",
    "edge_dot",
    "python_backend",
    "compiled_backend",
]
