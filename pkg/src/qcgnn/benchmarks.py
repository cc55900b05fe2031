"""Timing of the compiled kernels against the numpy fallback."""
from __future__ import annotations

import time

import numpy as np

from . import _kernels


def _time(fn, repeats: int) -> float:
    fn()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(seed: int = 0):
    rng = np.random.default_rng(seed)
    n = 12
    state = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    q1 = np.array([3], dtype=np.int64)
    q2 = np.array([7, 2], dtype=np.int64)
    u1 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    u2 = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    s4 = rng.normal(size=(16, 16)) + 0j
    q4 = np.array([9, 4, 1, 6], dtype=np.int64)
    # graph-shaped CSR: 8000 rows, 1-3 entries each
    rows = 8000
    deg = rng.integers(1, 4, size=rows)
    ptr = np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)
    cols = rng.integers(0, rows, size=int(ptr[-1])).astype(np.int64)
    vals = rng.random(int(ptr[-1]))
    dense = rng.normal(size=(rows, 31))
    other = rng.normal(size=(rows, 31))
    return {
        "apply_matrix 1q (12 qubits)": lambda k: k.apply_matrix(state, n, q1, u1),
        "apply_matrix 2q (12 qubits)": lambda k: k.apply_matrix(state, n, q2, u2),
        "apply_matrix 4q superop (12 qubits)": lambda k: k.apply_matrix(state, n, q4, s4),
        "segment_softmax": lambda k: k.segment_softmax(vals, ptr),
        "segment_softmax_backward": lambda k: k.segment_softmax_backward(vals, vals, ptr),
        "csr_matmul": lambda k: k.csr_matmul(ptr, cols, vals, dense),
        "csr_matmul_t": lambda k: k.csr_matmul_t(ptr, cols, vals, dense, rows),
        "edge_dot": lambda k: k.edge_dot(ptr, cols, dense, other),
    }


def bench_kernels(repeats: int = 20) -> dict:
    """Best-of-``repeats`` seconds per call for each backend, and the speedup."""
    backends = {"python": _kernels.python_backend}
    if _kernels.compiled_backend is not None:
        backends["cython"] = _kernels.compiled_backend
    out = {}
    for name, fn in _cases().items():
        row = {b: _time(lambda: fn(mod), repeats) for b, mod in backends.items()}
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        out[name] = row
    return out
