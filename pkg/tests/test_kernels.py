import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcgnn import _kernels as K
from qcgnn._kernels import compiled_backend, python_backend

from conftest import embed

needs_compiled = pytest.mark.skipif(compiled_backend is None, reason="compiled kernels not built")


def _random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def _random_ptr(rng, rows, max_len=5, allow_empty=True):
    lens = rng.integers(0 if allow_empty else 1, max_len + 1, size=rows)
    return np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)


@pytest.mark.parametrize("backend", [python_backend, compiled_backend], ids=["python", "compiled"])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_apply_matrix_against_full_operator(backend, k, rng):
    if backend is None:
        pytest.skip("compiled kernels not built")
    n = 5
    for _ in range(5):
        qubits = rng.permutation(n)[:k]
        mat = rng.normal(size=(2**k, 2**k)) + 1j * rng.normal(size=(2**k, 2**k))
        psi = _random_state(rng, n)
        want = embed(mat, list(qubits), n) @ psi
        got = psi.copy()
        backend.apply_matrix(got, n, np.asarray(qubits, dtype=np.int64), np.ascontiguousarray(mat))
        assert np.allclose(got, want, atol=1e-12)


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_segment_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    ptr = _random_ptr(rng, int(rng.integers(1, 30)))
    m = int(ptr[-1])
    scores = rng.normal(size=m) * 5
    a_py = python_backend.segment_softmax(scores, ptr)
    a_c = compiled_backend.segment_softmax(scores, ptr)
    assert np.allclose(a_py, a_c, atol=1e-14, rtol=0)
    g = rng.normal(size=m)
    assert np.allclose(
        python_backend.segment_softmax_backward(a_py, g, ptr),
        compiled_backend.segment_softmax_backward(a_py, g, ptr),
        atol=1e-14,
        rtol=0,
    )


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_csr_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    rows = int(rng.integers(1, 25))
    n_cols = int(rng.integers(1, 25))
    ptr = _random_ptr(rng, rows)
    cols = rng.integers(0, n_cols, size=int(ptr[-1])).astype(np.int64)
    vals = rng.normal(size=int(ptr[-1]))
    dense = rng.normal(size=(n_cols, 7))
    back = rng.normal(size=(rows, 7))
    for be in (python_backend, compiled_backend):
        assert np.allclose(be.csr_matmul(ptr, cols, vals, dense), python_backend.csr_matmul(ptr, cols, vals, dense), atol=1e-13)
        assert np.allclose(
            be.csr_matmul_t(ptr, cols, vals, back, n_cols), python_backend.csr_matmul_t(ptr, cols, vals, back, n_cols), atol=1e-13
        )
    rm = rng.normal(size=(rows, 7))
    cm = rng.normal(size=(n_cols, 7))
    assert np.allclose(compiled_backend.edge_dot(ptr, cols, rm, cm), python_backend.edge_dot(ptr, cols, rm, cm), atol=1e-13)


def test_segment_softmax_properties(rng):
    ptr = _random_ptr(rng, 40, allow_empty=False)
    scores = rng.normal(size=int(ptr[-1])) * 50
    a = K.segment_softmax(scores, ptr)
    assert np.all(a >= 0)
    assert np.allclose(np.add.reduceat(a, ptr[:-1]), 1.0, atol=1e-12)
    single = K.segment_softmax(np.array([3.7]), np.array([0, 1], dtype=np.int64))
    assert single[0] == 1.0


def test_csr_matmul_matches_dense(rng):
    ptr = _random_ptr(rng, 10)
    cols = rng.integers(0, 6, size=int(ptr[-1])).astype(np.int64)
    vals = rng.normal(size=int(ptr[-1]))
    dense = np.zeros((10, 6))
    for r in range(10):
        for e in range(ptr[r], ptr[r + 1]):
            dense[r, cols[e]] += vals[e]
    y = rng.normal(size=(6, 3))
    assert np.allclose(K.csr_matmul(ptr, cols, vals, y), dense @ y)
    z = rng.normal(size=(10, 3))
    assert np.allclose(K.csr_matmul_t(ptr, cols, vals, z, 6), dense.T @ z)


def test_backend_name():
    assert K.BACKEND in ("python", "cython")


def test_pure_python_switch():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from qcgnn import _kernels; print(_kernels.BACKEND)"],
        env={**__import__("os").environ, "QCGNN_PURE_PYTHON": "1"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"
