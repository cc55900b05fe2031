"""Circuit -> attributed DAG encoding.

Node feature layout (31 slots)::

    [0]       topological ordinal of the node inside its circuit
    [1:6]     node type: input, measure, CNOT, H|RX, T|RY
    [6:22]    gate-qubit multi-hot over 16 wire slots
    [22:24]   CNOT tag: (1, 0) lower slot is control, (0, 1) lower slot is target
    [24:31]   T1(a), T2(a), T1(b), T2(b), gate error, readout 0->1, readout 1->0

``a`` is the first listed qubit of the node (the control for a CNOT).
Rotation angles are not encoded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import MAX_QUBITS, Circuit, CircuitError, GateKind, GateSet, depth, gate_counts
from .noise import NoiseModel

FEATURE_DIM = 31
NUM_GLOBALS = 3
IDX = 0
TYPE = slice(1, 6)
QUBIT = slice(6, 22)
TAG = slice(22, 24)
NOISE = slice(24, 31)

_TYPE_SLOT = {
    GateSet.S: {GateKind.INPUT: 0, GateKind.MEASURE: 1, GateKind.CNOT: 2, GateKind.H: 3, GateKind.T: 4},
    GateSet.S_STAR: {GateKind.INPUT: 0, GateKind.MEASURE: 1, GateKind.CNOT: 2, GateKind.RX: 3, GateKind.RY: 4},
}


def node_type_onehot(kind: GateKind, gate_set: GateSet = GateSet.S) -> np.ndarray:
    table = _TYPE_SLOT[GateSet(gate_set)]
    if kind not in table:
        raise CircuitError(f"{kind.value} is not a node type of gate set {GateSet(gate_set).value}")
    out = np.zeros(5)
    out[table[kind]] = 1.0
    return out


@dataclass
class CircuitGraph:
    x: np.ndarray  # (n, 31)
    edges: np.ndarray  # (E, 2) src -> dst
    key: np.ndarray  # (n,) bool
    globals: np.ndarray  # (3,)
    meta: dict = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return self.x.shape[0]

    def to_record(self, target=None) -> dict:
        return {
            "nodes": self.x.tolist(),
            "edges": self.edges.tolist(),
            "key": self.key.tolist(),
            "globals": self.globals.tolist(),
            "target": target,
            "meta": self.meta,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CircuitGraph":
        return cls(
            np.asarray(rec["nodes"], dtype=float).reshape(-1, FEATURE_DIM),
            np.asarray(rec["edges"], dtype=np.int64).reshape(-1, 2),
            np.asarray(rec["key"], dtype=bool),
            np.asarray(rec["globals"], dtype=float),
            dict(rec.get("meta", {})),
        )


@dataclass
class PairGraph:
    """Two circuit graphs side by side; ``part`` is 0 for A's nodes and 1 for B's."""

    x: np.ndarray
    edges: np.ndarray
    key: np.ndarray
    part: np.ndarray
    globals_diff: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return self.x.shape[0]


def _noise_block(kind: GateKind, wires: Sequence[int], nm: NoiseModel | None) -> np.ndarray:
    out = np.zeros(7)
    if nm is None or kind is GateKind.INPUT:
        return out
    if kind is GateKind.MEASURE:
        q = nm.qubit(wires[0])
        out[5], out[6] = q.ro01, q.ro10
        return out
    qa = nm.qubit(wires[0])
    out[0], out[1] = qa.t1, qa.t2
    if kind is GateKind.CNOT:
        qb = nm.qubit(wires[1])
        out[2], out[3] = qb.t1, qb.t2
        out[4] = qa.err2
    else:
        out[4] = qa.err1
    return out


def circuit_to_graph(
    c: Circuit,
    nm: NoiseModel | None = None,
    slot_map: Sequence[int] | None = None,
) -> CircuitGraph:
    """Encode ``c`` as a DAG with input and measurement nodes on every wire.

    ``slot_map[w]`` moves wire ``w`` to another gate-qubit slot without touching
    its noise parameters (used for random slot injection); identity by default.
    """
    n = c.num_qubits
    if n > MAX_QUBITS:
        raise CircuitError(f"encoder holds at most {MAX_QUBITS} qubits, got {n}")
    slots = list(range(n)) if slot_map is None else [int(s) for s in slot_map]
    if len(slots) != n or len(set(slots)) != n or min(slots) < 0 or max(slots) >= MAX_QUBITS:
        raise CircuitError(f"slot map {slots} is not an injection into 0..{MAX_QUBITS - 1}")
    if nm is not None:
        nm.check_capacity(n)

    rows: list[np.ndarray] = []
    edges: list[tuple[int, int]] = []
    key: list[bool] = []
    last = [0] * n

    def add(kind: GateKind, wires: Sequence[int]) -> int:
        idx = len(rows)
        f = np.zeros(FEATURE_DIM)
        f[IDX] = idx
        f[TYPE] = node_type_onehot(kind, c.gate_set)
        for w in wires:
            f[QUBIT.start + slots[w]] = 1.0
        if kind is GateKind.CNOT:
            ctrl, tgt = slots[wires[0]], slots[wires[1]]
            f[TAG.start + (0 if ctrl < tgt else 1)] = 1.0
        f[NOISE] = _noise_block(kind, wires, nm)
        rows.append(f)
        key.append(kind not in (GateKind.INPUT, GateKind.MEASURE))
        return idx

    for w in range(n):
        last[w] = add(GateKind.INPUT, (w,))
    for g in c.gates:
        v = add(g.kind, g.qubits)
        for u in dict.fromkeys(last[w] for w in g.qubits):
            edges.append((u, v))
        for w in g.qubits:
            last[w] = v
    for w in range(n):
        v = add(GateKind.MEASURE, (w,))
        edges.append((last[w], v))

    total, cnots = gate_counts(c)
    return CircuitGraph(
        np.asarray(rows),
        np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        np.asarray(key, dtype=bool),
        np.array([total, cnots, depth(c)], dtype=float),
        {"n": n, "set": c.gate_set.value},
    )


def merge_pair(a: CircuitGraph, b: CircuitGraph) -> PairGraph:
    """Disjoint union A + B. Storage indices of B are offset; ordinal features are kept."""
    off = a.num_nodes
    return PairGraph(
        np.vstack([a.x, b.x]),
        np.vstack([a.edges, b.edges + off]).astype(np.int64),
        np.concatenate([a.key, b.key]),
        np.concatenate([np.zeros(a.num_nodes, dtype=np.int64), np.ones(b.num_nodes, dtype=np.int64)]),
        a.globals - b.globals,
    )


def topological_order(num_nodes: int, edges: np.ndarray) -> list[int]:
    """Kahn's algorithm; raises on a cycle."""
    indeg = np.zeros(num_nodes, dtype=int)
    succ: list[list[int]] = [[] for _ in range(num_nodes)]
    for u, v in edges:
        succ[u].append(v)
        indeg[v] += 1
    ready = [i for i in range(num_nodes) if indeg[i] == 0]
    order = []
    while ready:
        u = ready.pop()
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(order) != num_nodes:
        raise ValueError("graph has a cycle")
    return order


def decode_wires(g: CircuitGraph) -> dict[int, list[str]]:
    """Per-slot sequence of node types along each wire (structural inverse of the encoder)."""
    names = ["IN", "MEAS", "CNOT", "A", "B"]
    wires: dict[int, list[str]] = {}
    for i in np.argsort(g.x[:, IDX], kind="stable"):
        t = names[int(np.argmax(g.x[i, TYPE]))]
        for s in np.flatnonzero(g.x[i, QUBIT]):
            wires.setdefault(int(s), []).append(t)
    return wires


# ---- min-max normalization ---------------------------------------------------

@dataclass
class NormTable:
    """Per-dimension (min, max) for node features and globals."""

    xmin: np.ndarray
    xmax: np.ndarray
    gmin: np.ndarray
    gmax: np.ndarray

    @staticmethod
    def _scale(v, lo, hi):
        span = hi - lo
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (v - lo) / safe, 0.0)

    @staticmethod
    def _unscale(v, lo, hi):
        return lo + v * (hi - lo)

    def apply_x(self, x: np.ndarray) -> np.ndarray:
        return self._scale(x, self.xmin, self.xmax)

    def apply_globals(self, g: np.ndarray) -> np.ndarray:
        return self._scale(g, self.gmin, self.gmax)

    def invert_x(self, x: np.ndarray) -> np.ndarray:
        return self._unscale(x, self.xmin, self.xmax)

    def apply(self, g: CircuitGraph) -> CircuitGraph:
        return CircuitGraph(self.apply_x(g.x), g.edges, g.key, self.apply_globals(g.globals), dict(g.meta))

    def to_dict(self) -> dict:
        return {
            "min": self.xmin.tolist(),
            "max": self.xmax.tolist(),
            "globals_min": self.gmin.tolist(),
            "globals_max": self.gmax.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormTable":
        return cls(
            np.asarray(d["min"], float),
            np.asarray(d["max"], float),
            np.asarray(d.get("globals_min", [0.0] * NUM_GLOBALS), float),
            np.asarray(d.get("globals_max", [0.0] * NUM_GLOBALS), float),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "NormTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_norm_table(graphs: Sequence[CircuitGraph]) -> NormTable:
    if not graphs:
        raise ValueError("cannot fit normalization on an empty dataset")
    x = np.vstack([g.x for g in graphs])
    gl = np.vstack([g.globals for g in graphs])
    return NormTable(x.min(axis=0), x.max(axis=0), gl.min(axis=0), gl.max(axis=0))


def normalize_features(graphs: Sequence[CircuitGraph]) -> tuple[list[CircuitGraph], NormTable]:
    table = fit_norm_table(graphs)
    return [table.apply(g) for g in graphs], table
