"""Circuit representation over the gate sets S = {H, T, CNOT} and S* = {RX, RY, CNOT}.

Circuits hold logical gates only. Input and measurement markers exist as
``GateKind`` members because the graph encoder needs them as node types, but
they never appear inside a ``Circuit``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class GateKind(str, enum.Enum):
    INPUT = "IN"
    MEASURE = "MEAS"
    H = "H"
    T = "T"
    CNOT = "CNOT"
    RX = "RX"
    RY = "RY"

    @property
    def num_qubits(self) -> int:
        return 2 if self is GateKind.CNOT else 1

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RX, GateKind.RY)


class GateSet(str, enum.Enum):
    S = "S"
    S_STAR = "S*"


GATE_SET_KINDS = {
    GateSet.S: frozenset({GateKind.H, GateKind.T, GateKind.CNOT}),
    GateSet.S_STAR: frozenset({GateKind.RX, GateKind.RY, GateKind.CNOT}),
}

# qubit capacity of the graph encoder's gate-qubit slots, and the simulator guard
MAX_QUBITS = 16


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind in (GateKind.INPUT, GateKind.MEASURE):
            raise CircuitError(f"{kind.name} markers are graph-only and cannot be gates")
        if len(self.qubits) != kind.num_qubits:
            raise CircuitError(f"{kind.value} acts on {kind.num_qubits} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"CNOT control and target must differ, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.qubits}")
        if kind.parametric:
            if self.angle is None:
                raise CircuitError(f"{kind.value} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
            if not math.isfinite(self.angle):
                raise CircuitError(f"{kind.value} angle must be finite, got {self.angle}")
        elif self.angle is not None:
            raise CircuitError(f"{kind.value} takes no angle")

    def with_angle(self, angle: float) -> "Gate":
        return Gate(self.kind, self.qubits, angle)


@dataclass(frozen=True)
class Circuit:
    """Immutable time-ordered gate list on ``num_qubits`` wires."""

    num_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)
    gate_set: GateSet = GateSet.S

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "gate_set", GateSet(self.gate_set))
        if self.num_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        allowed = GATE_SET_KINDS[self.gate_set]
        for g in self.gates:
            if g.kind not in allowed:
                raise CircuitError(f"{g.kind.value} is not in gate set {self.gate_set.value}")
            if max(g.qubits) >= self.num_qubits:
                raise CircuitError(f"gate {g} exceeds {self.num_qubits} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def num_parameters(self) -> int:
        return sum(1 for g in self.gates if g.kind.parametric)

    @property
    def parameters(self) -> list[float]:
        return [g.angle for g in self.gates if g.kind.parametric]

    def bind(self, angles: Sequence[float]) -> "Circuit":
        """Return a copy with the rotation angles replaced in gate order."""
        angles = list(angles)
        if len(angles) != self.num_parameters:
            raise CircuitError(f"expected {self.num_parameters} angles, got {len(angles)}")
        it = iter(angles)
        gates = [g.with_angle(next(it)) if g.kind.parametric else g for g in self.gates]
        return Circuit(self.num_qubits, gates, self.gate_set)


def depth(c: Circuit) -> int:
    """Longest per-wire gate count; a CNOT counts once on each of its wires."""
    counts = [0] * c.num_qubits
    for g in c.gates:
        for q in g.qubits:
            counts[q] += 1
    return max(counts, default=0)


def gate_counts(c: Circuit) -> tuple[int, int]:
    """``(total_gates, cnot_count)``."""
    return len(c.gates), sum(1 for g in c.gates if g.kind is GateKind.CNOT)


def relabel_qubits(c: Circuit, perm: Mapping[int, int] | Sequence[int], num_qubits: int | None = None) -> Circuit:
    """Move wire ``q`` to ``perm[q]``.

    ``perm`` may be a sequence indexed by wire or a mapping; wires missing from
    a mapping stay in place. The result has ``num_qubits`` wires, defaulting to
    the smallest count that holds the image.
    """
    if isinstance(perm, Mapping):
        table = [int(perm.get(q, q)) for q in range(c.num_qubits)]
    else:
        table = [int(p) for p in perm]
        if len(table) != c.num_qubits:
            raise CircuitError(f"permutation covers {len(table)} wires, circuit has {c.num_qubits}")
    if len(set(table)) != len(table):
        raise CircuitError(f"qubit map {table} is not injective")
    if min(table) < 0 or max(table) >= MAX_QUBITS:
        raise CircuitError(f"qubit map {table} leaves the 0..{MAX_QUBITS - 1} range")
    n = num_qubits if num_qubits is not None else max(max(table) + 1, c.num_qubits)
    gates = [Gate(g.kind, tuple(table[q] for q in g.qubits), g.angle) for g in c.gates]
    return Circuit(n, gates, c.gate_set)


# ---- JSON-lines serialization -------------------------------------------------

def circuit_to_dict(c: Circuit) -> dict:
    return {
        "n": c.num_qubits,
        "set": c.gate_set.value,
        "gates": [{"k": g.kind.value, "q": list(g.qubits), "a": g.angle} for g in c.gates],
    }


def circuit_from_dict(d: Mapping) -> Circuit:
    gates = [Gate(GateKind(g["k"]), tuple(g["q"]), g.get("a")) for g in d["gates"]]
    return Circuit(int(d["n"]), gates, GateSet(d["set"]))


def _gate_json(g: Gate) -> str:
    angle = "null" if g.angle is None else f"{g.angle:.17g}"
    qubits = ",".join(str(q) for q in g.qubits)
    return f'{{"k":"{g.kind.value}","q":[{qubits}],"a":{angle}}}'


def dumps_circuit(c: Circuit) -> str:
    """One-line JSON with fixed field order and 17-significant-digit angles."""
    gates = ",".join(_gate_json(g) for g in c.gates)
    return f'{{"n":{c.num_qubits},"set":"{c.gate_set.value}","gates":[{gates}]}}'


def loads_circuit(line: str) -> Circuit:
    return circuit_from_dict(json.loads(line))


def write_circuits(path, circuits: Iterable[Circuit]) -> None:
    with open(path, "w") as fh:
        for c in circuits:
            fh.write(dumps_circuit(c) + "\n")


def read_circuits(path) -> list[Circuit]:
    with open(path) as fh:
        return [loads_circuit(line) for line in fh if line.strip()]
