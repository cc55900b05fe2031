"""Shared oracles.

The dense simulator here builds every gate as a full 2^N x 2^N operator by
explicit index arithmetic, independent of the strided kernels, and applies
noise as full-size Kraus sums.
"""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from qcgnn.circuit import Circuit
from qcgnn.simulator import depolarizing_kraus, gate_matrix, thermal_relaxation_kraus


def embed(mat: np.ndarray, qubits, n: int) -> np.ndarray:
    """Full operator of ``mat`` acting on ``qubits`` (qubits[0] most significant locally)."""
    k = len(qubits)
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    others = [q for q in range(n) if q not in qubits]
    for rest in itertools.product((0, 1), repeat=len(others)):
        base = sum(b << q for b, q in zip(rest, others))
        for r in range(2**k):
            row = base + sum(((r >> (k - 1 - j)) & 1) << qubits[j] for j in range(k))
            for c in range(2**k):
                col = base + sum(((c >> (k - 1 - j)) & 1) << qubits[j] for j in range(k))
                full[row, col] = mat[r, c]
    return full


def dense_unitary(c: Circuit) -> np.ndarray:
    u = np.eye(2**c.num_qubits, dtype=complex)
    for g in c.gates:
        u = embed(gate_matrix(g), g.qubits, c.num_qubits) @ u
    return u


def dense_state(c: Circuit) -> np.ndarray:
    return dense_unitary(c)[:, 0]


def dense_density(c: Circuit, nm) -> np.ndarray:
    """rho after gates: U, then depolarizing, then thermal relaxation per gate."""
    n = c.num_qubits
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    for g in c.gates:
        u = embed(gate_matrix(g), g.qubits, n)
        rho = u @ rho @ u.conj().T
        if nm is None:
            continue
        if len(g.qubits) == 1:
            q = g.qubits[0]
            depol = depolarizing_kraus(nm.qubit(q).err1, 1)
            relax_sets = [(q, thermal_relaxation_kraus(nm.qubit(q).t1, nm.qubit(q).t2, nm.dur1))]
        else:
            depol = depolarizing_kraus(nm.qubit(g.qubits[0]).err2, 2)
            relax_sets = [(q, thermal_relaxation_kraus(nm.qubit(q).t1, nm.qubit(q).t2, nm.dur2)) for q in g.qubits]
        ks = [embed(k, g.qubits, n) for k in depol]
        rho = sum(k @ rho @ k.conj().T for k in ks)
        for q, kr in relax_sets:
            ks = [embed(k, (q,), n) for k in kr]
            rho = sum(k @ rho @ k.conj().T for k in ks)
    return rho


def fd_gradient_check(model, batch, target, step=1e-5, rtol=1e-4, atol=1e-10):
    """Central differences for every scalar parameter.

    Returns the worst violation ratio |g - g_fd| / (rtol * max(|g|, |g_fd|) + atol);
    the check passes when this is <= 1. ``atol`` sits two orders of magnitude
    above the rounding floor eps * |loss| / step of a float64 central difference.
    """
    from qcgnn.gnn import loss_mse

    _, grads = model.loss_and_grads(batch, target)
    worst = 0.0
    worst_name = None
    for name, p in model.params.items():
        g = grads[name]
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = loss_mse(model.forward(batch), target)
            flat[i] = orig - step
            lm = loss_mse(model.forward(batch), target)
            flat[i] = orig
            num = (lp - lm) / (2 * step)
            ratio = abs(gflat[i] - num) / (rtol * max(abs(gflat[i]), abs(num)) + atol)
            if ratio > worst:
                worst, worst_name = ratio, (name, i, gflat[i], num)
    return worst, worst_name


def jitter_biases(model, rng, scale=0.3):
    """Move zero-initialized biases off the LeakyReLU kink so finite differences are smooth."""
    for k, v in model.params.items():
        if k.endswith(".b") or k.endswith(".bias"):
            v[:] = rng.normal(scale=scale, size=v.shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---- acceptance report -----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (len(s.split()[1]), s)):
            terminalreporter.write_line(line)
