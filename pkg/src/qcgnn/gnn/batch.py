"""Disjoint-union batching of circuit graphs and pair graphs.

Each member graph is put in canonical storage order (pair part, then the
ordinal feature) before concatenation, and edges, self-loops included, are
stored as CSR keyed by destination, sorted by source within a row. All
reductions downstream therefore run in an order independent of how the
caller stored the nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..graph import IDX, CircuitGraph, PairGraph


@dataclass
class Pooling:
    """CSR averaging operator: row r averages the key nodes of one (sub)graph."""

    ptr: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    num_nodes: int


@dataclass
class Batch:
    x: np.ndarray
    ptr: np.ndarray  # CSR by destination, length n+1
    src: np.ndarray  # source node of each edge
    dst: np.ndarray  # destination node of each edge (expanded ptr)
    globals: np.ndarray  # (G, 3): globals or global differences
    pools: tuple[Pooling, ...]  # one for circuit graphs, (A, B) for pairs
    num_graphs: int

    @property
    def num_nodes(self) -> int:
        return self.x.shape[0]


class EmptyKeySetError(ValueError):
    pass


def _canonical(x: np.ndarray, part: np.ndarray | None) -> np.ndarray:
    keys = (x[:, IDX],) if part is None else (x[:, IDX], part)
    return np.lexsort(keys)


def _pooling(members: list[np.ndarray], n: int) -> Pooling:
    counts = np.array([len(m) for m in members], dtype=np.int64)
    if np.any(counts == 0):
        raise EmptyKeySetError("graph without key (gate) nodes cannot be pooled")
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    cols = np.concatenate(members).astype(np.int64)
    vals = np.repeat(1.0 / counts, counts)
    return Pooling(ptr, cols, vals, n)


def _assemble(xs, edge_lists):
    offsets = np.concatenate([[0], np.cumsum([len(x) for x in xs])]).astype(np.int64)
    n = int(offsets[-1])
    x = np.vstack(xs) if xs else np.zeros((0, 31))
    src_all, dst_all = [], []
    for off, e, xi in zip(offsets[:-1], edge_lists, xs):
        m = len(xi)
        loops = np.arange(m, dtype=np.int64)
        src_all.append(np.concatenate([e[:, 0], loops]) + off)
        dst_all.append(np.concatenate([e[:, 1], loops]) + off)
    src = np.concatenate(src_all)
    dst = np.concatenate(dst_all)
    code = np.unique(dst * max(n, 1) + src)  # dedupe, sorted by (dst, src)
    dst, src = code // max(n, 1), code % max(n, 1)
    ptr = np.searchsorted(dst, np.arange(n + 1)).astype(np.int64)
    return x, ptr, src, dst, offsets


def _reorder(x, edges, key, part):
    order = _canonical(x, part)
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    edges = inv[edges] if len(edges) else edges.reshape(-1, 2)
    return x[order], edges, key[order], (None if part is None else part[order])


def make_batch(graphs: Sequence[CircuitGraph]) -> Batch:
    xs, es, ks = [], [], []
    for g in graphs:
        x, e, k, _ = _reorder(g.x, g.edges, g.key, None)
        xs.append(x)
        es.append(e)
        ks.append(k)
    x, ptr, src, dst, offsets = _assemble(xs, es)
    members = [np.flatnonzero(k) + off for k, off in zip(ks, offsets[:-1])]
    pool = _pooling(members, len(x))
    glob = np.vstack([g.globals for g in graphs])
    return Batch(np.ascontiguousarray(x), ptr, src, dst, glob, (pool,), len(graphs))


def make_pair_batch(pairs: Sequence[PairGraph]) -> Batch:
    xs, es, ks, ps = [], [], [], []
    for pg in pairs:
        x, e, k, p = _reorder(pg.x, pg.edges, pg.key, pg.part)
        xs.append(x)
        es.append(e)
        ks.append(k)
        ps.append(p)
    x, ptr, src, dst, offsets = _assemble(xs, es)
    mem_a = [np.flatnonzero(k & (p == 0)) + off for k, p, off in zip(ks, ps, offsets[:-1])]
    mem_b = [np.flatnonzero(k & (p == 1)) + off for k, p, off in zip(ks, ps, offsets[:-1])]
    pools = (_pooling(mem_a, len(x)), _pooling(mem_b, len(x)))
    glob = np.vstack([pg.globals_diff for pg in pairs])
    return Batch(np.ascontiguousarray(x), ptr, src, dst, glob, pools, len(pairs))
