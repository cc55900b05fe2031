"""Random circuit generation and peephole simplification.

All randomness comes from :func:`stream`, a Philox4x64 counter-based generator
keyed by ``(seed, index)``. Philox output depends only on the key and counter,
so record ``index`` of a dataset built from ``seed`` is reproducible on any
platform without generating records ``0..index-1`` first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitError, Gate, GateKind, GateSet

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class GenConfig:
    num_qubits: int
    depth: int = 5
    layers: int = 3
    seed: int = 0
    gate_set: GateSet = GateSet.S

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CircuitError("num_qubits must be >= 1")
        if self.depth < 1 or self.layers < 1:
            raise CircuitError("depth and layers must be >= 1")
        object.__setattr__(self, "gate_set", GateSet(self.gate_set))


def _rng_for(cfg: GenConfig, rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else stream(cfg.seed)


def generate_random_circuit(cfg: GenConfig, rng: np.random.Generator | None = None) -> Circuit:
    """Layered random circuit over S; each wire gets exactly one gate per layer.

    Unassigned wires are visited in random order and draw uniformly from
    {T, H, CNOT}. A CNOT takes a uniformly chosen unassigned partner as target;
    with no partner left the draw is repeated over {T, H}.
    """
    if cfg.gate_set is not GateSet.S:
        raise CircuitError("generate_random_circuit builds gate set S circuits")
    rng = _rng_for(cfg, rng)
    n = cfg.num_qubits
    gates: list[Gate] = []
    for _ in range(cfg.depth):
        assigned = [False] * n
        for q in rng.permutation(n):
            q = int(q)
            if assigned[q]:
                continue
            choice = int(rng.integers(3))
            if choice == 2:
                free = [p for p in range(n) if not assigned[p] and p != q]
                if not free:
                    choice = int(rng.integers(2))
                else:
                    partner = free[int(rng.integers(len(free)))]
                    gates.append(Gate(GateKind.CNOT, (q, partner)))
                    assigned[q] = assigned[partner] = True
                    continue
            gates.append(Gate(GateKind.T if choice == 0 else GateKind.H, (q,)))
            assigned[q] = True
    return Circuit(n, gates, GateSet.S)


def _next_on_wire(gates: list[Gate | None]) -> list[dict[int, int]]:
    """For each gate, the index of the next live gate on each of its wires."""
    nxt: list[dict[int, int]] = [dict() for _ in gates]
    last: dict[int, int] = {}
    for i in range(len(gates) - 1, -1, -1):
        g = gates[i]
        if g is None:
            continue
        for q in g.qubits:
            if q in last:
                nxt[i][q] = last[q]
            last[q] = i
    return nxt


def _one_pass(gates: list[Gate | None]) -> bool:
    nxt = _next_on_wire(gates)
    changed = False
    for i, g in enumerate(gates):
        if g is None:
            continue
        if g.kind is GateKind.H:
            j = nxt[i].get(g.qubits[0])
            if j is not None and gates[j] is not None and gates[j].kind is GateKind.H:
                gates[i] = gates[j] = None
                changed = True
        elif g.kind is GateKind.CNOT:
            c, t = g.qubits
            j = nxt[i].get(c)
            if j is not None and j == nxt[i].get(t) and gates[j] is not None and gates[j].qubits == g.qubits:
                gates[i] = gates[j] = None
                changed = True
        elif g.kind is GateKind.T:
            run = [i]
            q = g.qubits[0]
            while len(run) < 8:
                j = nxt[run[-1]].get(q)
                if j is None or gates[j] is None or gates[j].kind is not GateKind.T:
                    break
                run.append(j)
            if len(run) == 8:
                for j in run:
                    gates[j] = None
                changed = True
    # stale pointers only hide matches; the caller repeats until nothing changes
    return changed


def optimize_circuit(c: Circuit) -> Circuit:
    """Cancel H·H, T^8 and identical CNOT·CNOT wire-adjacent patterns to a fixed point."""
    if c.gate_set is not GateSet.S:
        raise CircuitError("optimize_circuit expects a gate set S circuit")
    gates: list[Gate | None] = list(c.gates)
    while _one_pass(gates):
        gates = [g for g in gates if g is not None]
    return Circuit(c.num_qubits, [g for g in gates if g is not None], c.gate_set)


def ring_pairs(n: int) -> list[tuple[int, int]]:
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def generate_pqc(cfg: GenConfig, rng: np.random.Generator | None = None, p_gate: float = 0.5) -> Circuit:
    """Random layered PQC over S*: RX sublayer, ring CNOT sublayer, RY sublayer.

    Each slot is filled with probability ``p_gate``; CNOT control is chosen
    uniformly within its pair; angles are uniform on [0, 2*pi).
    """
    if cfg.num_qubits < 2:
        raise CircuitError("PQCs need at least two qubits")
    rng = _rng_for(cfg, rng)
    n = cfg.num_qubits
    gates: list[Gate] = []
    for _ in range(cfg.layers):
        for q in range(n):
            if rng.random() < p_gate:
                gates.append(Gate(GateKind.RX, (q,), rng.uniform(0.0, 2 * math.pi)))
        for a, b in ring_pairs(n):
            if rng.random() < p_gate:
                pair = (a, b) if rng.random() < 0.5 else (b, a)
                gates.append(Gate(GateKind.CNOT, pair))
        for q in range(n):
            if rng.random() < p_gate:
                gates.append(Gate(GateKind.RY, (q,), rng.uniform(0.0, 2 * math.pi)))
    return Circuit(n, gates, GateSet.S_STAR)
