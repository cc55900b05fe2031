"""Pauli Hamiltonians and a derivative-free VQE loop for PQC energy labels.

Pauli words are written with character ``i`` acting on qubit ``i``.
The bundled H2 Hamiltonian (STO-3G, 0.735 A, Jordan-Wigner, spin orbitals
ordered sigma_g-up, sigma_g-down, sigma_u-up, sigma_u-down) is regenerated by
``scripts/derive_h2.py``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .circuit import Circuit, GateKind
from .noise import NoiseModel
from .simulator import (
    HADAMARD,
    DensityMatrix,
    StateVector,
    apply_unitary_dm,
    channels_for,
    gate_matrix,
    measured_probabilities,
    rx,
    ry,
)

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# rotate the measured Pauli onto Z before a computational-basis readout
_BASIS_CHANGE = {
    "X": HADAMARD,
    "Y": HADAMARD @ np.diag([1, -1j]),
    "Z": np.eye(2, dtype=complex),
}


class HamiltonianError(ValueError):
    pass


@dataclass(frozen=True)
class PauliHamiltonian:
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        terms = tuple((float(c), str(p).upper()) for c, p in self.terms)
        if not terms:
            raise HamiltonianError("empty Hamiltonian")
        n = len(terms[0][1])
        for c, p in terms:
            if len(p) != n or set(p) - set("IXYZ"):
                raise HamiltonianError(f"bad Pauli word {p!r}")
            if not math.isfinite(c):
                raise HamiltonianError(f"non-finite coefficient for {p}")
        object.__setattr__(self, "terms", terms)

    @property
    def num_qubits(self) -> int:
        return len(self.terms[0][1])

    def matrix(self) -> np.ndarray:
        d = 2**self.num_qubits
        out = np.zeros((d, d), dtype=complex)
        for c, word in self.terms:
            m = np.ones((1, 1), dtype=complex)
            for ch in reversed(word):  # qubit 0 is the least significant factor
                m = np.kron(m, _PAULI[ch])
            out += c * m
        return out

    def ground_energy(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix())[0])

    def to_json(self) -> str:
        return json.dumps([{"c": c, "p": p} for c, p in self.terms], indent=1)

    @classmethod
    def from_json(cls, text: str) -> "PauliHamiltonian":
        return cls(tuple((t["c"], t["p"]) for t in json.loads(text)))


def load_hamiltonian(path) -> PauliHamiltonian:
    with open(path) as fh:
        return PauliHamiltonian.from_json(fh.read())


def h2_hamiltonian() -> PauliHamiltonian:
    text = resources.files("qcgnn.data").joinpath("h2_sto3g.json").read_text()
    return PauliHamiltonian.from_json(text)


def expectation_hamiltonian(state: StateVector | DensityMatrix | np.ndarray, h: PauliHamiltonian) -> float:
    """Exact <H> for a pure state or density matrix (no measurement noise)."""
    hm = h.matrix()
    if isinstance(state, StateVector):
        vec = state.amplitudes
    elif isinstance(state, DensityMatrix):
        rho = state.matrix
        if rho.shape != hm.shape:
            raise HamiltonianError(f"state dim {rho.shape[0]} vs Hamiltonian dim {hm.shape[0]}")
        return float(np.real(np.trace(rho @ hm)))
    else:
        vec = np.asarray(state)
    if vec.shape[0] != hm.shape[0]:
        raise HamiltonianError(f"state dim {vec.shape[0]} vs Hamiltonian dim {hm.shape[0]}")
    return float(np.real(np.vdot(vec, hm @ vec)))


def measurement_groups(h: PauliHamiltonian) -> dict[str, list[tuple[float, str]]]:
    """Terms grouped by the per-qubit basis they are read in (identity read as Z)."""
    groups: dict[str, list[tuple[float, str]]] = {}
    for c, word in h.terms:
        basis = word.replace("I", "Z")
        groups.setdefault(basis, []).append((c, word))
    return groups


def _sign_table(n: int, word: str) -> np.ndarray:
    idx = np.arange(2**n)
    parity = np.zeros(2**n, dtype=np.int64)
    for q, ch in enumerate(word):
        if ch != "I":
            parity ^= (idx >> q) & 1
    return 1 - 2 * parity


def measured_energy(rho: DensityMatrix, h: PauliHamiltonian, nm: NoiseModel | None) -> float:
    """<H> estimated from per-basis outcome distributions with measurement noise."""
    n = rho.num_qubits
    if n != h.num_qubits:
        raise HamiltonianError(f"state has {n} qubits, Hamiltonian {h.num_qubits}")
    total = 0.0
    for basis, terms in measurement_groups(h).items():
        r = DensityMatrix(rho.flat.copy(), n)
        for q, ch in enumerate(basis):
            if ch != "Z":
                apply_unitary_dm(r, (q,), _BASIS_CHANGE[ch])
        probs = measured_probabilities(r, nm)
        for c, word in terms:
            total += c * float(np.dot(probs, _sign_table(n, word)))
    return total


class PqcEnergy:
    """Energy of a fixed PQC structure as a function of its angle vector."""

    def __init__(self, pqc: Circuit, h: PauliHamiltonian, nm: NoiseModel | None):
        if pqc.num_qubits != h.num_qubits:
            raise HamiltonianError(f"circuit has {pqc.num_qubits} qubits, Hamiltonian {h.num_qubits}")
        self.pqc = pqc
        self.h = h
        self.nm = nm
        self.n = pqc.num_qubits
        self.evaluations = 0
        if nm is None:
            self._hm = h.matrix()
            self._ops = [(np.asarray(g.qubits, dtype=np.int64), g.kind, None if g.kind.parametric else gate_matrix(g))
                         for g in pqc.gates]
        else:
            nm.check_capacity(self.n)
            chans = channels_for(nm)
            # fold measurement noise and the per-term signs into one weight vector per basis:
            # E = sum_g w_g . diag(U_g rho U_g^dagger)
            meas = np.eye(1)
            for q in reversed(range(self.n)):
                meas = np.kron(meas, _measurement_map(nm, q))
            self._groups = []
            for basis, terms in measurement_groups(h).items():
                signs = sum(c * _sign_table(self.n, w) for c, w in terms)
                u = np.ones((1, 1), dtype=complex)
                for ch in reversed(basis):
                    u = np.kron(u, _BASIS_CHANGE[ch])
                self._groups.append((u, meas.T @ signs))
            ops = []
            for g in pqc.gates:
                qs = np.asarray([q + self.n for q in g.qubits] + list(g.qubits), dtype=np.int64)
                noise = chans.noise_superop(g.kind, g.qubits)
                if g.kind.parametric:
                    ops.append((qs, g.kind, noise))
                else:
                    u = gate_matrix(g)
                    ops.append((qs, None, np.ascontiguousarray(noise @ np.kron(u, u.conj()))))
            self._ops = ops

    def state(self, angles) -> StateVector | DensityMatrix:
        it = iter(angles)
        if self.nm is None:
            psi = np.zeros(2**self.n, dtype=complex)
            psi[0] = 1.0
            for qs, kind, u in self._ops:
                if u is None:
                    a = next(it)
                    u = rx(a) if kind is GateKind.RX else ry(a)
                _kernels.apply_matrix(psi, self.n, qs, u)
            return StateVector(psi, self.n)
        flat = np.zeros(4**self.n, dtype=complex)
        flat[0] = 1.0
        for qs, kind, s in self._ops:
            if kind is not None:
                a = next(it)
                u = rx(a) if kind is GateKind.RX else ry(a)
                s = np.ascontiguousarray(s @ np.kron(u, u.conj()))
            _kernels.apply_matrix(flat, 2 * self.n, qs, s)
        return DensityMatrix(flat, self.n)

    def __call__(self, angles) -> float:
        self.evaluations += 1
        st = self.state(angles)
        if self.nm is None:
            v = st.amplitudes
            return float(np.real(np.vdot(v, self._hm @ v)))
        rho = st.matrix
        total = 0.0
        for u, weights in self._groups:
            diag = np.einsum("ij,jk,ik->i", u, rho, u.conj()).real
            total += float(np.dot(weights, diag))
        return total


def _measurement_map(nm: NoiseModel, q: int) -> np.ndarray:
    """Column-stochastic 2x2 map: relaxation during readout, then confusion."""
    from .simulator import readout_matrix, relaxation_parameters

    qn = nm.qubit(q)
    gamma, _ = relaxation_parameters(qn.t1, qn.t2, nm.durm)
    return readout_matrix(qn.ro01, qn.ro10) @ np.array([[1.0, gamma], [0.0, 1.0 - gamma]])


@dataclass
class VqeResult:
    energy: float
    params: np.ndarray
    iterations_used: int
    history: list[float] = field(default_factory=list)
    optimizer: str = "COBYLA"


def vqe_optimize(
    pqc: Circuit,
    h: PauliHamiltonian,
    nm: NoiseModel | None = None,
    max_iters: int = 200,
    seed: int | None = None,
    rhobeg: float = 1.0,
) -> VqeResult:
    """Minimize the PQC energy with COBYLA for at most ``max_iters`` evaluations.

    The start point is the circuit's own angles, or fresh uniform [0, 2*pi)
    angles drawn from ``seed`` when one is given. ``history`` holds the
    best energy seen after each evaluation.
    """
    from .randgen import stream

    f = PqcEnergy(pqc, h, nm)
    k = pqc.num_parameters
    if seed is not None:
        x0 = stream(seed).uniform(0.0, 2 * math.pi, size=k)
    else:
        x0 = np.asarray(pqc.parameters, dtype=float)
    history: list[float] = []
    best = [math.inf, x0.copy()]

    def objective(x):
        e = f(x)
        if e < best[0]:
            best[0], best[1] = e, np.array(x, dtype=float)
        history.append(best[0])
        return e

    if k == 0:
        objective(x0)
    else:
        minimize(objective, x0, method="COBYLA", options={"maxiter": max_iters, "rhobeg": rhobeg})
    return VqeResult(best[0], best[1], len(history), history)
