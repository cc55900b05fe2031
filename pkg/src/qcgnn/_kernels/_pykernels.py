"""Pure numpy/scipy implementations of the hot loops.

Conventions shared with the compiled module:

* ``apply_matrix`` acts in place on a length-``2**n`` complex vector. Qubit ``q``
  is bit ``q`` of the basis index. The operator's local index puts
  ``qubits[0]`` in the most significant position.
* Segment/CSR routines take a row pointer ``ptr`` (length ``nrows + 1``) and
  per-entry column indices ``cols``; entries of row ``r`` live in
  ``ptr[r]:ptr[r+1]``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def apply_matrix(state: np.ndarray, n: int, qubits: np.ndarray, mat: np.ndarray) -> None:
    k = len(qubits)
    # tensor axis a corresponds to qubit n-1-a (C order, bit 0 is the last axis)
    axes = [n - 1 - int(q) for q in qubits]
    psi = state.reshape((2,) * n)
    psi = np.moveaxis(psi, axes, range(k))
    shape = psi.shape
    out = mat @ psi.reshape(2**k, -1)
    out = np.moveaxis(out.reshape(shape), range(k), axes)
    state[:] = out.reshape(-1)


def _seg_ids(ptr: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(len(ptr) - 1), np.diff(ptr))


def segment_softmax(scores: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    if len(scores) == 0:
        return scores.astype(np.float64)
    starts = ptr[:-1][np.diff(ptr) > 0]
    seg = _seg_ids(ptr)
    mx = np.full(len(ptr) - 1, -np.inf)
    mx[np.diff(ptr) > 0] = np.maximum.reduceat(scores, starts)
    ex = np.exp(scores - mx[seg])
    tot = np.zeros(len(ptr) - 1)
    tot[np.diff(ptr) > 0] = np.add.reduceat(ex, starts)
    return ex / tot[seg]


def segment_softmax_backward(alpha: np.ndarray, grad_alpha: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    if len(alpha) == 0:
        return alpha.astype(np.float64)
    nonempty = np.diff(ptr) > 0
    dot = np.zeros(len(ptr) - 1)
    dot[nonempty] = np.add.reduceat(alpha * grad_alpha, ptr[:-1][nonempty])
    return alpha * (grad_alpha - dot[_seg_ids(ptr)])


def _csr(ptr, cols, vals, n_cols):
    return sp.csr_matrix((vals, cols, ptr), shape=(len(ptr) - 1, n_cols))


def csr_matmul(ptr, cols, vals, dense):
    return np.asarray(_csr(ptr, cols, vals, dense.shape[0]) @ dense)


def csr_matmul_t(ptr, cols, vals, dense, n_out):
    return np.asarray(_csr(ptr, cols, vals, n_out).T @ dense)


def edge_dot(ptr, cols, row_mat, col_mat):
    rows = _seg_ids(ptr)
    return np.einsum("ij,ij->i", row_mat[rows], col_mat[cols])
