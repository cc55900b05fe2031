# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics are identical to ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def apply_matrix(double complex[::1] state, int n, cnp.int64_t[::1] qubits, double complex[:, ::1] mat):
    cdef int k = qubits.shape[0]
    cdef int dim = 1 << k
    cdef cnp.int64_t[16] offsets
    cdef cnp.int64_t[4] sorted_q
    cdef double[16] br
    cdef double[16] bi
    cdef double[256] mr
    cdef double[256] mi
    cdef cnp.int64_t i, base, j, m, r, t, q, outer = 1 << (n - k)
    cdef double ar, ai, xr, xi, yr, yi
    cdef double complex z

    if k > 4:
        raise ValueError("at most 4 qubits per operator")
    for r in range(dim):
        for m in range(dim):
            z = mat[r, m]
            mr[r * dim + m] = z.real
            mi[r * dim + m] = z.imag
    for m in range(dim):
        offsets[m] = 0
        for j in range(k):
            if (m >> (k - 1 - j)) & 1:
                offsets[m] += 1 << qubits[j]
    for j in range(k):
        sorted_q[j] = qubits[j]
    for j in range(1, k):
        t = sorted_q[j]
        r = j - 1
        while r >= 0 and sorted_q[r] > t:
            sorted_q[r + 1] = sorted_q[r]
            r -= 1
        sorted_q[r + 1] = t

    for i in range(outer):
        base = i
        for j in range(k):
            q = sorted_q[j]
            base = ((base >> q) << (q + 1)) | (base & ((1 << q) - 1))
        for m in range(dim):
            z = state[base + offsets[m]]
            br[m] = z.real
            bi[m] = z.imag
        for r in range(dim):
            ar = 0.0
            ai = 0.0
            for m in range(dim):
                xr = mr[r * dim + m]
                xi = mi[r * dim + m]
                yr = br[m]
                yi = bi[m]
                ar = ar + (xr * yr - xi * yi)
                ai = ai + (xr * yi + xi * yr)
            state[base + offsets[r]] = ar + 1j * ai


def segment_softmax(double[::1] scores, cnp.int64_t[::1] ptr):
    cdef Py_ssize_t nseg = ptr.shape[0] - 1
    cdef Py_ssize_t s, e
    cdef double mx, tot
    out = np.empty(scores.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    for s in range(nseg):
        if ptr[s + 1] == ptr[s]:
            continue
        mx = scores[ptr[s]]
        for e in range(ptr[s] + 1, ptr[s + 1]):
            if scores[e] > mx:
                mx = scores[e]
        tot = 0.0
        for e in range(ptr[s], ptr[s + 1]):
            o[e] = exp(scores[e] - mx)
            tot += o[e]
        for e in range(ptr[s], ptr[s + 1]):
            o[e] = o[e] / tot
    return out


def segment_softmax_backward(double[::1] alpha, double[::1] grad_alpha, cnp.int64_t[::1] ptr):
    cdef Py_ssize_t nseg = ptr.shape[0] - 1
    cdef Py_ssize_t s, e
    cdef double dot
    out = np.empty(alpha.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    for s in range(nseg):
        dot = 0.0
        for e in range(ptr[s], ptr[s + 1]):
            dot += alpha[e] * grad_alpha[e]
        for e in range(ptr[s], ptr[s + 1]):
            o[e] = alpha[e] * (grad_alpha[e] - dot)
    return out


def csr_matmul(cnp.int64_t[::1] ptr, cnp.int64_t[::1] cols, double[::1] vals, double[:, ::1] dense):
    cdef Py_ssize_t nrows = ptr.shape[0] - 1
    cdef Py_ssize_t d = dense.shape[1]
    cdef Py_ssize_t r, e, c, f
    cdef double v
    out = np.zeros((nrows, d), dtype=np.float64)
    cdef double[:, ::1] o = out
    for r in range(nrows):
        for e in range(ptr[r], ptr[r + 1]):
            c = cols[e]
            v = vals[e]
            for f in range(d):
                o[r, f] += v * dense[c, f]
    return out


def csr_matmul_t(cnp.int64_t[::1] ptr, cnp.int64_t[::1] cols, double[::1] vals, double[:, ::1] dense, Py_ssize_t n_out):
    cdef Py_ssize_t nrows = ptr.shape[0] - 1
    cdef Py_ssize_t d = dense.shape[1]
    cdef Py_ssize_t r, e, c, f
    cdef double v
    out = np.zeros((n_out, d), dtype=np.float64)
    cdef double[:, ::1] o = out
    for r in range(nrows):
        for e in range(ptr[r], ptr[r + 1]):
            c = cols[e]
            v = vals[e]
            for f in range(d):
                o[c, f] += v * dense[r, f]
    return out


def edge_dot(cnp.int64_t[::1] ptr, cnp.int64_t[::1] cols, double[:, ::1] row_mat, double[:, ::1] col_mat):
    cdef Py_ssize_t nrows = ptr.shape[0] - 1
    cdef Py_ssize_t d = row_mat.shape[1]
    cdef Py_ssize_t r, e, c, f
    cdef double acc
    out = np.empty(cols.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    for r in range(nrows):
        for e in range(ptr[r], ptr[r + 1]):
            c = cols[e]
            acc = 0.0
            for f in range(d):
                acc += row_mat[r, f] * col_mat[c, f]
            o[e] = acc
    return out
