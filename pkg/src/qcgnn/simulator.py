"""Statevector, density-matrix and trajectory simulation of S / S* circuits.

Qubit ``q`` is bit ``q`` of a basis index (little-endian); count keys are
written with qubit 0 as the rightmost character.

Noisy gates apply, in order: the gate unitary, a depolarizing channel with
the gate's error probability on the involved qubits, and thermal relaxation
(amplitude damping then pure dephasing) for the gate duration on each involved
qubit. Measurement applies thermal relaxation for the measurement duration and
then the per-qubit readout confusion.

A density matrix on N qubits is stored as its row-major flattening, i.e. a
2N-qubit "vector" whose high N bits index the row. An operator K on qubit q
then acts as K on bit q+N and conj(K) on bit q, which lets one kernel serve
both backends: each noisy gate is folded into a single superoperator.
"""
from __future__ import annotations

import functools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .circuit import Circuit, Gate, GateKind
from .noise import NoiseModel
from .randgen import stream

MAX_STATEVECTOR_QUBITS = 16
MAX_DENSITY_QUBITS = 8


class CapacityError(ValueError):
    pass


I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
T_GATE = np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex)
CNOT_MATRIX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
PAULIS = (I2, PAULI_X, PAULI_Y, PAULI_Z)


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def gate_matrix(g: Gate) -> np.ndarray:
    """Unitary in the basis of ``g.qubits`` (first listed qubit most significant)."""
    if g.kind is GateKind.H:
        return HADAMARD
    if g.kind is GateKind.T:
        return T_GATE
    if g.kind is GateKind.CNOT:
        return CNOT_MATRIX
    if g.kind is GateKind.RX:
        return rx(g.angle)
    if g.kind is GateKind.RY:
        return ry(g.angle)
    raise ValueError(f"no unitary for {g.kind}")


# ---- states --------------------------------------------------------------------

@dataclass
class StateVector:
    amplitudes: np.ndarray
    num_qubits: int

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class DensityMatrix:
    flat: np.ndarray  # row-major flattening, length 4**N
    num_qubits: int

    @property
    def matrix(self) -> np.ndarray:
        d = 2**self.num_qubits
        return self.flat.reshape(d, d)

    def probabilities(self) -> np.ndarray:
        return np.real(np.diagonal(self.matrix)).copy()

    @classmethod
    def from_matrix(cls, rho: np.ndarray) -> "DensityMatrix":
        n = int(round(math.log2(rho.shape[0])))
        return cls(np.ascontiguousarray(rho, dtype=complex).reshape(-1).copy(), n)


# ---- channels ------------------------------------------------------------------

def depolarizing_kraus(p: float, k: int = 1) -> list[np.ndarray]:
    """Kraus ops of rho -> (1-p) rho + p I/2^k."""
    d2 = 4**k
    ops = []
    for word in np.ndindex(*(4,) * k):
        mat = np.ones((1, 1), dtype=complex)
        for w in word:
            mat = np.kron(mat, PAULIS[w])
        weight = 1 - p + p / d2 if not any(word) else p / d2
        if weight > 0:
            ops.append(math.sqrt(weight) * mat)
    return ops


def relaxation_parameters(t1: float, t2: float, duration_ns: float) -> tuple[float, float]:
    """(amplitude-damping gamma, phase-damping lambda) for a wait of ``duration_ns``."""
    t_us = duration_ns * 1e-3
    gamma = 0.0 if math.isinf(t1) else 1.0 - math.exp(-t_us / t1)
    t2 = min(t2, 2 * t1)
    rate_phi = (0.0 if math.isinf(t2) else 1.0 / t2) - (0.0 if math.isinf(t1) else 0.5 / t1)
    rate_phi = max(rate_phi, 0.0)
    lam = 1.0 - math.exp(-2.0 * t_us * rate_phi)
    return gamma, lam


def thermal_relaxation_kraus(t1: float, t2: float, duration_ns: float) -> list[np.ndarray]:
    gamma, lam = relaxation_parameters(t1, t2, duration_ns)
    damp = [
        np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
    ]
    dephase = [
        np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex),
        np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex),
    ]
    ops = [b @ a for b in dephase for a in damp]
    return [k for k in ops if np.any(np.abs(k) > 0)]


def kraus_tensor(*kraus_sets: list[np.ndarray]) -> list[np.ndarray]:
    """Kraus ops of independent channels on consecutive qubits (first set most significant)."""
    out = [np.ones((1, 1), dtype=complex)]
    for ks in kraus_sets:
        out = [np.kron(a, b) for a in out for b in ks]
    return out


def superop(kraus: list[np.ndarray]) -> np.ndarray:
    return sum(np.kron(k, k.conj()) for k in kraus)


def kraus_completeness(kraus: list[np.ndarray]) -> np.ndarray:
    return sum(k.conj().T @ k for k in kraus)


class GateChannels:
    """Kraus sets for one noise model, cached per (kind, qubits)."""

    def __init__(self, nm: NoiseModel):
        self.nm = nm
        self._kraus: dict = {}
        self._super: dict = {}

    def relaxation(self, q: int, duration: float) -> list[np.ndarray]:
        key = ("relax", q, duration)
        if key not in self._kraus:
            qn = self.nm.qubit(q)
            self._kraus[key] = thermal_relaxation_kraus(qn.t1, qn.t2, duration)
        return self._kraus[key]

    def noise_kraus(self, kind: GateKind, qubits: tuple[int, ...]) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """(depolarizing Kraus, relaxation Kraus) for a gate, both over ``qubits``."""
        key = ("gate", kind.num_qubits, qubits)
        if key not in self._kraus:
            nm = self.nm
            if len(qubits) == 1:
                depol = depolarizing_kraus(nm.qubit(qubits[0]).err1, 1)
                relax = self.relaxation(qubits[0], nm.dur1)
            else:
                # the two-qubit error is taken from the first listed (control) qubit's row
                depol = depolarizing_kraus(nm.qubit(qubits[0]).err2, 2)
                relax = kraus_tensor(*(self.relaxation(q, nm.dur2) for q in qubits))
            self._kraus[key] = (depol, relax)
        return self._kraus[key]

    def noise_superop(self, kind: GateKind, qubits: tuple[int, ...]) -> np.ndarray:
        key = (kind.num_qubits, qubits)
        if key not in self._super:
            depol, relax = self.noise_kraus(kind, qubits)
            self._super[key] = superop(relax) @ superop(depol)
        return self._super[key]


@functools.lru_cache(maxsize=32)
def channels_for(nm: NoiseModel) -> GateChannels:
    return GateChannels(nm)


# ---- backends ------------------------------------------------------------------

def _check_statevector(n: int) -> None:
    if n > MAX_STATEVECTOR_QUBITS:
        raise CapacityError(f"statevector backend supports at most {MAX_STATEVECTOR_QUBITS} qubits, got {n}")


def run_statevector(c: Circuit) -> StateVector:
    _check_statevector(c.num_qubits)
    psi = np.zeros(2**c.num_qubits, dtype=complex)
    psi[0] = 1.0
    for g in c.gates:
        _kernels.apply_matrix(psi, c.num_qubits, np.asarray(g.qubits, dtype=np.int64), gate_matrix(g))
    return StateVector(psi, c.num_qubits)


def _dm_qubits(qubits: tuple[int, ...], n: int) -> np.ndarray:
    return np.asarray([q + n for q in qubits] + list(qubits), dtype=np.int64)


def apply_superop(rho: DensityMatrix, qubits: tuple[int, ...], s: np.ndarray) -> None:
    _kernels.apply_matrix(rho.flat, 2 * rho.num_qubits, _dm_qubits(qubits, rho.num_qubits), np.ascontiguousarray(s))


def apply_unitary_dm(rho: DensityMatrix, qubits: tuple[int, ...], u: np.ndarray) -> None:
    apply_superop(rho, qubits, np.kron(u, u.conj()))


def run_density(c: Circuit, nm: NoiseModel | None) -> DensityMatrix:
    """Density matrix after all gates (measurement effects excluded)."""
    n = c.num_qubits
    if n > MAX_DENSITY_QUBITS:
        raise CapacityError(
            f"density backend supports at most {MAX_DENSITY_QUBITS} qubits, got {n}; use run_trajectories"
        )
    rho = DensityMatrix(np.zeros(4**n, dtype=complex), n)
    rho.flat[0] = 1.0
    if nm is not None:
        nm.check_capacity(n)
    chans = channels_for(nm) if nm is not None else None
    for g in c.gates:
        u = gate_matrix(g)
        s = np.kron(u, u.conj())
        if chans is not None:
            s = chans.noise_superop(g.kind, g.qubits) @ s
        apply_superop(rho, g.qubits, s)
    return rho


def _apply_per_qubit_stochastic(probs: np.ndarray, n: int, mats: list[np.ndarray]) -> np.ndarray:
    """Apply an independent 2x2 column-stochastic map to each qubit of a distribution."""
    t = probs.reshape((2,) * n)
    for q, m in enumerate(mats):
        axis = n - 1 - q
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def readout_matrix(ro01: float, ro10: float) -> np.ndarray:
    # column = prepared bit, row = reported bit
    return np.array([[1 - ro01, ro10], [ro01, 1 - ro10]])


def apply_readout_confusion(probs: np.ndarray, nm: NoiseModel | None) -> np.ndarray:
    if nm is None:
        return probs.copy()
    n = int(round(math.log2(len(probs))))
    nm.check_capacity(n)
    mats = [readout_matrix(nm.qubit(q).ro01, nm.qubit(q).ro10) for q in range(n)]
    return _apply_per_qubit_stochastic(np.asarray(probs, dtype=float), n, mats)


def apply_measurement_relaxation(probs: np.ndarray, nm: NoiseModel | None) -> np.ndarray:
    """Population decay 1 -> 0 during the measurement window."""
    if nm is None:
        return probs.copy()
    n = int(round(math.log2(len(probs))))
    mats = []
    for q in range(n):
        qn = nm.qubit(q)
        gamma, _ = relaxation_parameters(qn.t1, qn.t2, nm.durm)
        mats.append(np.array([[1.0, gamma], [0.0, 1.0 - gamma]]))
    return _apply_per_qubit_stochastic(np.asarray(probs, dtype=float), n, mats)


def measured_probabilities(state: StateVector | DensityMatrix, nm: NoiseModel | None) -> np.ndarray:
    """Outcome distribution including measurement relaxation and readout confusion."""
    p = state.probabilities()
    if nm is None:
        return p
    return apply_readout_confusion(apply_measurement_relaxation(p, nm), nm)


def _pauli_sample(rng: np.random.Generator, k: int) -> np.ndarray:
    mat = np.ones((1, 1), dtype=complex)
    for w in rng.integers(4, size=k):
        mat = np.kron(mat, PAULIS[int(w)])
    return mat


def _sample_kraus(psi: np.ndarray, n: int, qubits: np.ndarray, kraus: list[np.ndarray], rng) -> np.ndarray:
    branches = []
    weights = []
    for k in kraus:
        phi = psi.copy()
        _kernels.apply_matrix(phi, n, qubits, k)
        w = float(np.vdot(phi, phi).real)
        branches.append(phi)
        weights.append(w)
    weights = np.asarray(weights)
    idx = int(rng.choice(len(kraus), p=weights / weights.sum()))
    return branches[idx] / math.sqrt(weights[idx])


def _trajectory_shot(c: Circuit, nm: NoiseModel, chans: GateChannels, rng: np.random.Generator) -> int:
    n = c.num_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    for g in c.gates:
        qs = np.asarray(g.qubits, dtype=np.int64)
        _kernels.apply_matrix(psi, n, qs, gate_matrix(g))
        k = len(g.qubits)
        p = nm.qubit(g.qubits[0]).err1 if k == 1 else nm.qubit(g.qubits[0]).err2
        if p > 0 and rng.random() < p:
            _kernels.apply_matrix(psi, n, qs, _pauli_sample(rng, k))
        dur = nm.dur1 if k == 1 else nm.dur2
        for q in g.qubits:
            relax = chans.relaxation(q, dur)
            if len(relax) > 1:
                psi = _sample_kraus(psi, n, np.asarray([q], dtype=np.int64), relax, rng)
    for q in range(n):
        relax = chans.relaxation(q, nm.durm)
        if len(relax) > 1:
            psi = _sample_kraus(psi, n, np.asarray([q], dtype=np.int64), relax, rng)
    probs = np.abs(psi) ** 2
    outcome = int(rng.choice(len(probs), p=probs / probs.sum()))
    for q in range(n):
        qn = nm.qubit(q)
        bit = (outcome >> q) & 1
        flip = qn.ro01 if bit == 0 else qn.ro10
        if flip > 0 and rng.random() < flip:
            outcome ^= 1 << q
    return outcome


def run_trajectories(c: Circuit, nm: NoiseModel | None, shots: int, seed: int = 0) -> Counter:
    """Sampled bitstring counts; shot ``s`` uses its own stream ``(seed, s)``."""
    n = c.num_qubits
    _check_statevector(n)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    counts: Counter = Counter()
    if nm is None:
        probs = run_statevector(c).probabilities()
        for s in range(shots):
            counts[int(stream(seed, s).choice(len(probs), p=probs / probs.sum()))] += 1
    else:
        nm.check_capacity(n)
        chans = channels_for(nm)
        for s in range(shots):
            counts[_trajectory_shot(c, nm, chans, stream(seed, s))] += 1
    return Counter({format(k, f"0{n}b"): v for k, v in sorted(counts.items())})


def counts_to_probabilities(counts: Counter, n: int) -> np.ndarray:
    p = np.zeros(2**n)
    total = sum(counts.values())
    for bits, v in counts.items():
        p[int(bits, 2)] = v / total
    return p


# ---- observables ---------------------------------------------------------------

def _bit(n: int, i: int) -> np.ndarray:
    return (np.arange(2**n) >> i) & 1


def z_from_probabilities(probs: np.ndarray, i: int) -> float:
    n = int(round(math.log2(len(probs))))
    if not 0 <= i < n:
        raise IndexError(f"qubit {i} out of range for {n} qubits")
    return float(np.dot(probs, 1 - 2 * _bit(n, i)))


def zz_from_probabilities(probs: np.ndarray, i: int, j: int) -> float:
    n = int(round(math.log2(len(probs))))
    if i == j:
        raise ValueError("expectation_zz needs two distinct qubits")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"qubits ({i}, {j}) out of range for {n} qubits")
    return float(np.dot(probs, 1 - 2 * (_bit(n, i) ^ _bit(n, j))))


def expectation_z(state: StateVector | DensityMatrix, i: int) -> float:
    """<Z_i> = P(0 at i) - P(1 at i)."""
    return z_from_probabilities(state.probabilities(), i)


def expectation_zz(state: StateVector | DensityMatrix, i: int, j: int) -> float:
    return zz_from_probabilities(state.probabilities(), i, j)


def rescale_single(zraw: float) -> float:
    """Map <Z> in [-1, 1] to [0, 1] with |0> -> 0 and |1> -> 1."""
    return 1.0 - (zraw + 1.0) / 2.0


def rescale_pair(zzraw: float) -> float:
    return 1.0 - (zzraw + 1.0) / 2.0


def output_probabilities(c: Circuit, nm: NoiseModel | None, shots: int = 4000, seed: int = 0) -> np.ndarray:
    """Measured outcome distribution, picking the cheapest exact backend.

    Noiseless circuits use the statevector; noisy circuits up to
    ``MAX_DENSITY_QUBITS`` use the density matrix; larger noisy circuits fall
    back to ``shots`` trajectories.
    """
    if nm is None:
        return run_statevector(c).probabilities()
    if c.num_qubits <= MAX_DENSITY_QUBITS:
        return measured_probabilities(run_density(c, nm), nm)
    return counts_to_probabilities(run_trajectories(c, nm, shots, seed), c.num_qubits)
