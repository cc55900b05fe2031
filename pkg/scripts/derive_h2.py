"""Derive the 4-qubit Jordan-Wigner H2 Hamiltonian from STO-3G integrals.

Writes src/qcgnn/data/h2_sto3g.json. The integrals are the closed-form
s-type Gaussian expressions; the minimal-basis molecular orbitals are fixed
by symmetry (bonding/antibonding), so no SCF loop is required.

Spin-orbital ordering: (sigma_g up, sigma_g down, sigma_u up, sigma_u down)
mapped to qubits 0..3, |1> = occupied. Pauli strings are written with
character i acting on qubit i.

Usage:  python scripts/derive_h2.py [--bond 0.735] [--out PATH]
"""
from __future__ import annotations

import argparse
import itertools
import json
from math import erf, exp, pi, sqrt
from pathlib import Path

import numpy as np

BOHR_PER_ANGSTROM = 1.0 / 0.529177210903
# STO-3G hydrogen 1s contraction (zeta = 1.24)
ALPHAS = (3.42525091, 0.62391373, 0.16885540)
COEFFS = (0.15432897, 0.53532814, 0.44463454)


def _boys0(t: float) -> float:
    if t < 1e-12:
        return 1.0
    return 0.5 * sqrt(pi / t) * erf(sqrt(t))


def _norm(a: float) -> float:
    return (2.0 * a / pi) ** 0.75


def _primitives(center):
    return [(a, c * _norm(a), np.asarray(center, float)) for a, c in zip(ALPHAS, COEFFS)]


def ao_integrals(bond_bohr: float):
    centers = [np.zeros(3), np.array([0.0, 0.0, bond_bohr])]
    basis = [_primitives(c) for c in centers]
    n = len(basis)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i, j in itertools.product(range(n), repeat=2):
        for a, ca, A in basis[i]:
            for b, cb, B in basis[j]:
                p = a + b
                ab2 = float(np.dot(A - B, A - B))
                k = exp(-a * b / p * ab2)
                P = (a * A + b * B) / p
                S[i, j] += ca * cb * (pi / p) ** 1.5 * k
                T[i, j] += ca * cb * a * b / p * (3 - 2 * a * b / p * ab2) * (pi / p) ** 1.5 * k
                for C in centers:
                    pc2 = float(np.dot(P - C, P - C))
                    V[i, j] += -ca * cb * 2 * pi / p * k * _boys0(p * pc2)
    eri = np.zeros((n, n, n, n))
    for i, j, k_, l in itertools.product(range(n), repeat=4):
        total = 0.0
        for a, ca, A in basis[i]:
            for b, cb, B in basis[j]:
                p = a + b
                P = (a * A + b * B) / p
                kab = exp(-a * b / p * float(np.dot(A - B, A - B)))
                for c, cc, C in basis[k_]:
                    for d, cd, D in basis[l]:
                        q = c + d
                        Q = (c * C + d * D) / q
                        kcd = exp(-c * d / q * float(np.dot(C - D, C - D)))
                        pref = 2 * pi**2.5 / (p * q * sqrt(p + q))
                        t = p * q / (p + q) * float(np.dot(P - Q, P - Q))
                        total += ca * cb * cc * cd * pref * kab * kcd * _boys0(t)
        eri[i, j, k_, l] = total
    return S, T + V, eri


def mo_integrals(bond_bohr: float):
    S, h_ao, eri_ao = ao_integrals(bond_bohr)
    s = S[0, 1]
    C = np.array([[1, 1], [1, -1]], float)
    C[:, 0] /= sqrt(2 * (1 + s))
    C[:, 1] /= sqrt(2 * (1 - s))
    h = C.T @ h_ao @ C
    eri = np.einsum("pi,qj,rk,sl,pqrs->ijkl", C, C, C, C, eri_ao)
    return h, eri


def _jw_lowering(n: int):
    """Jordan-Wigner annihilators on n qubits, qubit j = bit j of the basis index."""
    z = np.diag([1.0, -1.0])
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    eye = np.eye(2)
    ops = []
    for j in range(n):
        mat = np.ones((1, 1))
        # kron order: most significant factor first, so build from qubit n-1 down to 0
        for q in reversed(range(n)):
            f = lower if q == j else (z if q < j else eye)
            mat = np.kron(mat, f)
        ops.append(mat)
    return ops


def qubit_hamiltonian_matrix(bond_angstrom: float = 0.735) -> np.ndarray:
    r = bond_angstrom * BOHR_PER_ANGSTROM
    h, eri = mo_integrals(r)
    nso = 4
    a = _jw_lowering(nso)
    H = np.eye(16) / r
    for p, q in itertools.product(range(nso), repeat=2):
        if p % 2 == q % 2:
            H += h[p // 2, q // 2] * a[p].T @ a[q]
    for p, q, rr, s in itertools.product(range(nso), repeat=4):
        # <pq|rs> = (pr|qs) chemists' notation with spin conservation
        if p % 2 == rr % 2 and q % 2 == s % 2:
            v = eri[p // 2, rr // 2, q // 2, s // 2]
            if v != 0.0:
                H += 0.5 * v * a[p].T @ a[q].T @ a[s] @ a[rr]
    return H


def pauli_decompose(H: np.ndarray, n: int = 4, tol: float = 1e-12):
    paulis = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]], complex),
        "Y": np.array([[0, -1j], [1j, 0]], complex),
        "Z": np.diag([1.0, -1.0]),
    }
    terms = []
    for word in itertools.product("IXYZ", repeat=n):
        mat = np.ones((1, 1))
        for ch in reversed(word):
            mat = np.kron(mat, paulis[ch])
        c = np.trace(mat @ H) / 2**n
        if abs(c) > tol:
            assert abs(c.imag) < 1e-12
            terms.append({"c": float(c.real), "p": "".join(word)})
    return terms


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--bond", type=float, default=0.735)
    ap.add_argument("--out", default=str(Path(__file__).parents[1] / "src/qcgnn/data/h2_sto3g.json"))
    args = ap.parse_args()
    H = qubit_hamiltonian_matrix(args.bond)
    terms = pauli_decompose(H)
    print(f"{len(terms)} terms, lambda_min = {np.linalg.eigvalsh(H)[0]:.10f}")
    Path(args.out).write_text(json.dumps(terms, indent=1) + "\n")


if __name__ == "__main__":
    main()
