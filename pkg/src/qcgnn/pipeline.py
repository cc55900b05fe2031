"""Datasets, training, metrics and the two circuit-comparison schemes.

Every random draw is keyed by ``stream(seed, index)``: circuit ``i`` of a
dataset uses index ``i``, splits and pair matchings use reserved indices, so
results do not depend on worker scheduling.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .circuit import MAX_QUBITS, Circuit, circuit_from_dict, circuit_to_dict
from .gnn import AdamState, GnnModel, adam_step, loss_mse, make_batch, make_pair_batch
from .gnn.batch import Batch
from .graph import CircuitGraph, NormTable, circuit_to_graph, fit_norm_table, merge_pair
from .noise import NoiseModel, resolve
from .randgen import GenConfig, generate_pqc, generate_random_circuit, optimize_circuit, stream
from .simulator import output_probabilities, rescale_pair, rescale_single, z_from_probabilities, zz_from_probabilities
from .vqe import PauliHamiltonian, h2_hamiltonian, vqe_optimize

TASKS = ("single_qubit", "two_qubit", "energy", "compare")
SPLITS = ("train", "val", "test")
SPLIT_FRACTIONS = (0.7, 0.2, 0.1)

# reserved stream indices (circuit i uses index i)
_SPLIT_STREAM = 2**62
_PAIR_STREAM = 2**62 + 1
_EPOCH_STREAM = 2**61
_INJECT_STREAM = 2**60


class ConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


class DegenerateTargetsError(ValueError):
    pass


# ---- configuration -------------------------------------------------------------

def _as_range(v) -> tuple[int, int]:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"range must have two ends, got {v!r}")
        lo, hi = int(v[0]), int(v[1])
    else:
        lo = hi = int(v)
    if lo > hi:
        raise ConfigError(f"empty range {lo}..{hi}")
    return lo, hi


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; ``n`` and ``p`` are an int or an inclusive [lo, hi] range."""

    task: str = "single_qubit"
    n: int | tuple[int, int] = 3
    p: int | tuple[int, int] = 5
    size: int = 20000
    noise: str = "none"
    epochs: int = 200
    lr: float = 0.01
    batch: int = 512
    seed: int = 0
    out_dim: int = 1
    pqc_layers: int = 3
    vqe_iters: int = 200
    pairs_per_circuit: int = 2
    inject_slots: bool = False
    shots: int = 4000

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        n_lo, n_hi = _as_range(self.n)
        p_lo, p_hi = _as_range(self.p)
        object.__setattr__(self, "n", n_lo if n_lo == n_hi else (n_lo, n_hi))
        object.__setattr__(self, "p", p_lo if p_lo == p_hi else (p_lo, p_hi))
        if n_lo < 1 or n_hi > MAX_QUBITS:
            raise ConfigError(f"qubit count must lie in 1..{MAX_QUBITS}")
        if p_lo < 1:
            raise ConfigError("depth must be >= 1")
        if self.task == "two_qubit" and n_lo < 2:
            raise ConfigError("two-qubit targets need N >= 2")
        if self.task in ("energy", "compare"):
            if (n_lo, n_hi) != (4, 4):
                raise ConfigError("energy/compare tasks use the 4-qubit H2 Hamiltonian (n=4)")
            if self.size < 2:
                raise ConfigError("a PQC pool needs at least two circuits")
        if self.size < 1:
            raise ConfigError("size must be positive")
        for name in ("epochs", "batch", "pqc_layers", "vqe_iters", "pairs_per_circuit", "shots"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if self.out_dim not in (1, 2):
            raise ConfigError("out_dim must be 1 or 2")
        if self.out_dim == 2 and self.task != "two_qubit":
            # the only two-output target defined here is (z_0, z_01)
            raise ConfigError("out_dim=2 is only defined for the two_qubit task")
        try:
            nm = resolve(self.noise)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if nm is not None and nm.num_qubits < n_hi:
            raise ConfigError(f"noise preset {self.noise!r} covers {nm.num_qubits} qubits, config needs {n_hi}")

    @property
    def gate_set(self) -> str:
        return "S*" if self.task in ("energy", "compare") else "S"

    @property
    def noise_model(self) -> NoiseModel | None:
        return resolve(self.noise)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("n", "p"):
            if isinstance(d[k], tuple):
                d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        for k in ("n", "p"):
            if isinstance(kw.get(k), list):
                kw[k] = tuple(kw[k])
        return cls(**kw)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a flat JSON object")
    return ExperimentConfig.from_dict(d)


# ---- records and splits --------------------------------------------------------

@dataclass
class DatasetRecord:
    graph: CircuitGraph
    target: float | list[float]
    split: str
    circuit: Circuit | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        """Graph-record line ({nodes, edges, key, globals, target, meta}) plus split and source circuit."""
        d = self.graph.to_record(self.target)
        d["meta"] = {**self.graph.meta, **self.meta}
        d["split"] = self.split
        d["circuit"] = None if self.circuit is None else circuit_to_dict(self.circuit)
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "DatasetRecord":
        d = json.loads(line)
        g = CircuitGraph.from_record(d)
        meta = dict(d.get("meta", {}))
        g.meta = {k: meta.pop(k) for k in ("n", "set") if k in meta}
        circ = None if d.get("circuit") is None else circuit_from_dict(d["circuit"])
        return cls(g, d["target"], d["split"], circ, meta)


def split_sizes(size: int) -> tuple[int, int, int]:
    n_train = int(round(SPLIT_FRACTIONS[0] * size))
    n_val = int(round(SPLIT_FRACTIONS[1] * size))
    return n_train, n_val, size - n_train - n_val


def assign_splits(size: int, seed: int) -> list[str]:
    """Seeded 70/20/10 partition of ``range(size)``."""
    perm = stream(seed, _SPLIT_STREAM).permutation(size)
    n_train, n_val, _ = split_sizes(size)
    out = [""] * size
    for rank, i in enumerate(perm):
        out[int(i)] = "train" if rank < n_train else ("val" if rank < n_train + n_val else "test")
    return out


@dataclass
class Dataset:
    config: ExperimentConfig
    records: list[DatasetRecord]
    pairs: dict[str, np.ndarray] | None = None  # compare task: split -> (m, 2) record indices
    info: dict = field(default_factory=dict)

    def indices(self, split: str) -> list[int]:
        return [i for i, r in enumerate(self.records) if r.split == split]

    def split(self, split: str) -> list[DatasetRecord]:
        return [r for r in self.records if r.split == split]

    def counts(self) -> dict[str, int]:
        return {s: len(self.indices(s)) for s in SPLITS}

    def save(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        data = out / "dataset.jsonl"
        with open(data, "w") as fh:
            for r in self.records:
                fh.write(r.to_json() + "\n")
        meta = {"config": self.config.to_dict(), "counts": self.counts(), "info": self.info}
        if self.pairs is not None:
            meta["pairs"] = {s: self.pairs[s].tolist() for s in SPLITS}
        side = out / "dataset.meta.json"
        side.write_text(json.dumps(meta, indent=1, sort_keys=True))
        return [data, side]

    @classmethod
    def load(cls, out_dir) -> "Dataset":
        out = Path(out_dir)
        if not (out / "dataset.jsonl").exists():
            raise FileNotFoundError(f"no dataset.jsonl in {out}")
        meta = json.loads((out / "dataset.meta.json").read_text())
        with open(out / "dataset.jsonl") as fh:
            records = [DatasetRecord.from_json(line) for line in fh if line.strip()]
        pairs = None
        if "pairs" in meta:
            pairs = {s: np.asarray(meta["pairs"][s], dtype=np.int64).reshape(-1, 2) for s in SPLITS}
        return cls(ExperimentConfig.from_dict(meta["config"]), records, pairs, meta.get("info", {}))


# ---- expectation datasets -----------------------------------------------------

def injection_map(n: int, rng: np.random.Generator, slots: int = MAX_QUBITS) -> list[int]:
    """Wire 0 (the measured target) stays on slot 0; the other wires land on random distinct slots."""
    if n > slots:
        raise ConfigError(f"cannot inject {n} wires into {slots} slots")
    return [0] + [int(s) + 1 for s in rng.choice(slots - 1, size=n - 1, replace=False)]


def _draw(lo_hi, rng) -> int:
    lo, hi = _as_range(lo_hi)
    return lo if lo == hi else int(rng.integers(lo, hi + 1))


def _expectation_record(args) -> tuple[Circuit, CircuitGraph, float | list[float], dict]:
    cfg, i = args
    nm = cfg.noise_model
    rng = stream(cfg.seed, i)
    n = _draw(cfg.n, rng)
    p = _draw(cfg.p, rng)
    redraws = 0
    while True:
        c = optimize_circuit(generate_random_circuit(GenConfig(n, depth=p), rng))
        if c.gates:
            break
        redraws += 1  # every gate cancelled: no key nodes to pool
    probs = output_probabilities(c, nm, shots=cfg.shots, seed=cfg.seed ^ i)
    z0 = rescale_single(z_from_probabilities(probs, 0))
    if cfg.task == "single_qubit":
        target: float | list[float] = z0
    else:
        z01 = rescale_pair(zz_from_probabilities(probs, 0, 1))
        target = z01 if cfg.out_dim == 1 else [z0, z01]
    slot_map = injection_map(n, stream(cfg.seed, _INJECT_STREAM + i)) if cfg.inject_slots else None
    g = circuit_to_graph(c, nm, slot_map)
    meta = {"index": i, "seed": cfg.seed, "N": n, "P": p, "noise": cfg.noise, "task": cfg.task, "redraws": redraws}
    if slot_map is not None:
        meta["slots"] = slot_map
    return c, g, target, meta


def _parallel_map(fn, items, jobs: int | None):
    jobs = jobs or 1
    if jobs <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (8 * jobs))))


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def build_expectation_dataset(cfg: ExperimentConfig, jobs: int | None = 1) -> Dataset:
    if cfg.task not in ("single_qubit", "two_qubit"):
        raise ConfigError(f"task {cfg.task!r} is not an expectation-value task")
    splits = assign_splits(cfg.size, cfg.seed)
    rows = _parallel_map(_expectation_record, [(cfg, i) for i in range(cfg.size)], jobs)
    records = [DatasetRecord(g, t, splits[i], c, m) for i, (c, g, t, m) in enumerate(rows)]
    return Dataset(cfg, records)


# ---- PQC pools and pair datasets ------------------------------------------------

def pair_label(e_a: float, e_b: float) -> float:
    """> 0.5 iff A has the lower (better) normalized energy."""
    return (e_b - e_a) / 2.0 + 0.5


@dataclass(frozen=True)
class EnergyNorm:
    lo: float
    hi: float

    def apply(self, e):
        span = self.hi - self.lo
        if span <= 0:
            return np.zeros_like(np.asarray(e, dtype=float)) if np.ndim(e) else 0.0
        return (np.asarray(e, dtype=float) - self.lo) / span if np.ndim(e) else (float(e) - self.lo) / span

    def to_dict(self) -> dict:
        return {"min": self.lo, "max": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyNorm":
        return cls(float(d["min"]), float(d["max"]))


def _pool_record(args):
    cfg, i, h = args
    nm = cfg.noise_model
    rng = stream(cfg.seed, i)
    redraws = 0
    while True:
        c = generate_pqc(GenConfig(4, layers=cfg.pqc_layers, gate_set="S*"), rng)
        if c.gates:
            break
        redraws += 1
    res = vqe_optimize(c, h, nm, max_iters=cfg.vqe_iters)
    g = circuit_to_graph(c, nm)
    meta = {"index": i, "seed": cfg.seed, "N": 4, "L": cfg.pqc_layers, "noise": cfg.noise,
            "energy": res.energy, "evaluations": res.iterations_used, "optimizer": res.optimizer,
            "redraws": redraws}
    return c, g, res.energy, meta


def match_pairs(indices: Sequence[int], k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` rounds of random perfect matching; each index lands in one pair per round."""
    idx = np.asarray(indices, dtype=np.int64)
    out = []
    for _ in range(k):
        perm = idx[rng.permutation(len(idx))]
        m = len(perm) // 2 * 2
        out.append(perm[:m].reshape(-1, 2))
    return np.concatenate(out) if out else np.zeros((0, 2), dtype=np.int64)


def build_pool_dataset(cfg: ExperimentConfig, h: PauliHamiltonian | None = None, jobs: int | None = 1) -> Dataset:
    """PQC pool with VQE energies; targets are pool-normalized energies; pairs formed within splits."""
    if cfg.task not in ("energy", "compare"):
        raise ConfigError(f"task {cfg.task!r} does not use a PQC pool")
    h = h or h2_hamiltonian()
    splits = assign_splits(cfg.size, cfg.seed)
    rows = _parallel_map(_pool_record, [(cfg, i, h) for i in range(cfg.size)], jobs)
    energies = np.array([e for _, _, e, _ in rows])
    norm = EnergyNorm(float(energies.min()), float(energies.max()))
    records = [DatasetRecord(g, float(norm.apply(e)), splits[i], c, m) for i, (c, g, e, m) in enumerate(rows)]
    rng = stream(cfg.seed, _PAIR_STREAM)
    pairs = {}
    for s in SPLITS:
        pairs[s] = match_pairs([i for i in range(cfg.size) if splits[i] == s], cfg.pairs_per_circuit, rng)
    info = {"energy_norm": norm.to_dict(), "degenerate": bool(norm.hi <= norm.lo)}
    return Dataset(cfg, records, pairs, info)


def build_pair_dataset(pool_size: int, nm: str = "lagos", seed: int = 0, jobs: int | None = 1, **kw) -> Dataset:
    return build_pool_dataset(ExperimentConfig(task="compare", n=4, size=pool_size, noise=nm, seed=seed, **kw), jobs=jobs)


def build_dataset(cfg: ExperimentConfig, jobs: int | None = 1) -> Dataset:
    if cfg.task in ("energy", "compare"):
        return build_pool_dataset(cfg, jobs=jobs)
    return build_expectation_dataset(cfg, jobs=jobs)


def cached_dataset(cfg: ExperimentConfig, cache_dir, jobs: int | None = 1) -> Dataset:
    """Build once per config digest under ``cache_dir``; reload afterwards."""
    path = Path(cache_dir) / f"{cfg.task}-{cfg.digest()}"
    if (path / "dataset.meta.json").exists():
        return Dataset.load(path)
    ds = build_dataset(cfg, jobs=jobs)
    tmp = path.with_name(path.name + ".partial")
    ds.save(tmp)
    tmp.rename(path)
    return ds


# ---- training sets -------------------------------------------------------------

class GraphSet:
    """Normalized circuit graphs with (k,)-shaped targets."""

    def __init__(self, graphs: Sequence[CircuitGraph], targets):
        self.graphs = list(graphs)
        self.targets = np.asarray(targets, dtype=float).reshape(len(self.graphs), -1)

    def __len__(self):
        return len(self.graphs)

    def batch(self, idx) -> tuple[Batch, np.ndarray]:
        return make_batch([self.graphs[i] for i in idx]), self.targets[idx]


class PairSet:
    """Pairs of normalized circuit graphs, merged on demand."""

    def __init__(self, graphs: Sequence[CircuitGraph], pairs: np.ndarray, labels):
        self.graphs = list(graphs)
        self.pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        self.targets = np.asarray(labels, dtype=float).reshape(-1, 1)

    def __len__(self):
        return len(self.pairs)

    def batch(self, idx) -> tuple[Batch, np.ndarray]:
        pgs = [merge_pair(self.graphs[a], self.graphs[b]) for a, b in self.pairs[idx]]
        return make_pair_batch(pgs), self.targets[idx]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    lr: float = 0.01
    batch: int = 512
    seed: int = 0


@dataclass
class TrainResult:
    model: GnnModel
    history: list[dict]
    seconds: float


def _predict_set(model: GnnModel, data, chunk: int = 2048) -> np.ndarray:
    outs = []
    for s in range(0, len(data), chunk):
        b, _ = data.batch(np.arange(s, min(s + chunk, len(data))))
        outs.append(model.forward(b))
    return np.concatenate(outs) if outs else np.zeros((0, model.config.out_dim))


def set_loss(model: GnnModel, data) -> float:
    return loss_mse(_predict_set(model, data), data.targets)


def train(model: GnnModel, train_set, val_set=None, cfg: TrainConfig = TrainConfig(),
          log: Callable[[dict], None] | None = None) -> TrainResult:
    """Mini-batch Adam on MSE for a fixed number of epochs; returns the final-epoch model."""
    if len(train_set) == 0:
        raise TrainingError("empty training set")
    state = AdamState()
    history = []
    t0 = time.perf_counter()
    n = len(train_set)
    for epoch in range(cfg.epochs):
        perm = stream(cfg.seed, _EPOCH_STREAM + epoch).permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch):
            idx = perm[s:s + cfg.batch]
            b, y = train_set.batch(idx)
            loss, grads = model.loss_and_grads(b, y)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}, batch starting {s}")
            adam_step(model.params, grads, state, lr=cfg.lr)
            total += loss * len(idx)
        row = {"epoch": epoch, "train_loss": total / n}
        if val_set is not None and len(val_set):
            row["val_loss"] = set_loss(model, val_set)
            if not math.isfinite(row["val_loss"]):
                raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history.append(row)
        if log is not None:
            log(row)
    return TrainResult(model, history, time.perf_counter() - t0)


# ---- metrics -------------------------------------------------------------------

def r2_score(y, yhat) -> float:
    """1 - SS_res / SS_tot, summed over records and outputs, with the overall target mean."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {yhat.shape}")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateTargetsError("targets have zero variance; R^2 is undefined")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def evaluate_r2(model: GnnModel, test_set: GraphSet) -> float:
    return r2_score(test_set.targets, _predict_set(model, test_set))


def predict_graphs(model: GnnModel, graphs: Sequence[CircuitGraph]) -> np.ndarray:
    return _predict_set(model, GraphSet(graphs, np.zeros((len(graphs), model.config.out_dim))))


# ---- comparison schemes --------------------------------------------------------

def decide_indirect(e_a: float, e_b: float) -> str:
    return "A" if e_a <= e_b else "B"


def decide_direct(prob_a: float) -> str:
    return "A" if prob_a >= 0.5 else "B"


def indirect_compare(energy_model: GnnModel, a: CircuitGraph, b: CircuitGraph) -> str:
    """Two model evaluations; lower predicted normalized energy wins, ties go to A."""
    e_a = float(energy_model.forward(make_batch([a]))[0, 0])
    e_b = float(energy_model.forward(make_batch([b]))[0, 0])
    return decide_indirect(e_a, e_b)


def direct_compare(comparator: GnnModel, a: CircuitGraph, b: CircuitGraph) -> str:
    """One comparator evaluation on the merged pair; output >= 0.5 means A wins."""
    return decide_direct(float(comparator.forward(make_pair_batch([merge_pair(a, b)]))[0, 0]))


def true_winners(energies: Sequence[float], pairs: np.ndarray) -> list[str | None]:
    """Lower energy wins; exact ties are None."""
    out = []
    for a, b in pairs:
        ea, eb = energies[a], energies[b]
        out.append(None if ea == eb else ("A" if ea < eb else "B"))
    return out


def comparison_accuracy(predicted: Sequence[str], truth: Sequence[str | None]) -> tuple[float, int]:
    """(fraction correct over non-tied pairs, number of ties)."""
    if len(predicted) != len(truth):
        raise ValueError("prediction/truth length mismatch")
    keep = [(p, t) for p, t in zip(predicted, truth) if t is not None]
    ties = len(truth) - len(keep)
    if not keep:
        return float("nan"), ties
    return sum(p == t for p, t in keep) / len(keep), ties


def indirect_winners(energy_model: GnnModel, graphs: Sequence[CircuitGraph], pairs: np.ndarray) -> list[str]:
    pred = predict_graphs(energy_model, graphs)[:, 0]
    return [decide_indirect(pred[a], pred[b]) for a, b in pairs]


def direct_winners(comparator: GnnModel, graphs: Sequence[CircuitGraph], pairs: np.ndarray) -> list[str]:
    probs = _predict_set(comparator, PairSet(graphs, pairs, np.zeros(len(pairs))))[:, 0]
    return [decide_direct(p) for p in probs]


def rank_pool(compare: Callable[[object, object], str], items: Sequence) -> tuple[list[int], int]:
    """Bubble sort by a pairwise "which is better" oracle, best first.

    Returns the ordering (indices into ``items``) and the number of comparisons.
    """
    order = list(range(len(items)))
    count = 0
    for end in range(len(order) - 1, 0, -1):
        swapped = False
        for j in range(end):
            count += 1
            if compare(items[order[j]], items[order[j + 1]]) == "B":
                order[j], order[j + 1] = order[j + 1], order[j]
                swapped = True
        if not swapped:
            break
    return order, count


# ---- experiments ---------------------------------------------------------------

@dataclass
class Prepared:
    """Normalized graphs of a dataset plus the feature table fit on its train split."""

    dataset: Dataset
    table: NormTable
    graphs: list[CircuitGraph]

    def graph_set(self, split: str) -> GraphSet:
        idx = self.dataset.indices(split)
        return GraphSet([self.graphs[i] for i in idx], [self.dataset.records[i].target for i in idx])


def prepare(ds: Dataset) -> Prepared:
    train_graphs = [r.graph for r in ds.split("train")]
    table = fit_norm_table(train_graphs)
    return Prepared(ds, table, [table.apply(r.graph) for r in ds.records])


def _train_cfg(cfg: ExperimentConfig) -> TrainConfig:
    return TrainConfig(epochs=cfg.epochs, lr=cfg.lr, batch=cfg.batch, seed=cfg.seed)


def run_expectation_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None, log=None) -> dict:
    """Train the expectation (or energy) regressor and report test R^2."""
    ds = dataset if dataset is not None else build_dataset(cfg)
    prep = prepare(ds)
    model = GnnModel.create("expectation", out_dim=cfg.out_dim, seed=cfg.seed)
    res = train(model, prep.graph_set("train"), prep.graph_set("val"), _train_cfg(cfg), log)
    test = prep.graph_set("test")
    pred = _predict_set(res.model, test)
    return {
        "config": cfg.to_dict(),
        "r2": r2_score(test.targets, pred),
        "history": res.history,
        "train_seconds": res.seconds,
        "model": res.model,
        "table": prep.table,
        "predictions": pred,
        "targets": test.targets,
    }


def pair_set(prep: Prepared, split: str, both_orders: bool) -> PairSet:
    ds = prep.dataset
    pairs = ds.pairs[split]
    if both_orders:
        pairs = np.concatenate([pairs, pairs[:, ::-1]])
    e = np.array([r.target for r in ds.records], dtype=float)
    labels = [pair_label(e[a], e[b]) for a, b in pairs]
    return PairSet(prep.graphs, pairs, labels)


def run_comparison_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None, log=None) -> dict:
    """Train the energy regressor (indirect) and the comparator (direct) on one pool."""
    if cfg.task != "compare":
        raise ConfigError("comparison experiments need task=compare")
    ds = dataset if dataset is not None else build_pool_dataset(cfg)
    prep = prepare(ds)
    tc = _train_cfg(cfg)
    energy_model = GnnModel.create("expectation", out_dim=1, seed=cfg.seed)
    res_e = train(energy_model, prep.graph_set("train"), prep.graph_set("val"), tc, log)
    comparator = GnnModel.create("compare", seed=cfg.seed)
    res_c = train(comparator, pair_set(prep, "train", True), pair_set(prep, "val", True), tc, log)
    test_pairs = ds.pairs["test"]
    raw = [r.meta["energy"] for r in ds.records]
    truth = true_winners(raw, test_pairs)
    acc_d, ties = comparison_accuracy(direct_winners(res_c.model, prep.graphs, test_pairs), truth)
    acc_i, _ = comparison_accuracy(indirect_winners(res_e.model, prep.graphs, test_pairs), truth)
    test_energy = prep.graph_set("test")
    return {
        "config": cfg.to_dict(),
        "direct_accuracy": acc_d,
        "indirect_accuracy": acc_i,
        "ties": ties,
        "test_pairs": int(len(test_pairs)),
        "energy_r2": r2_score(test_energy.targets, _predict_set(res_e.model, test_energy)),
        "history_energy": res_e.history,
        "history_compare": res_c.history,
        "energy_model": res_e.model,
        "comparator": res_c.model,
        "table": prep.table,
        "energy_norm": ds.info.get("energy_norm"),
    }


def _timeit(fn, trials: int) -> np.ndarray:
    out = np.empty(trials)
    for t in range(trials):
        t0 = time.perf_counter()
        fn(t)
        out[t] = time.perf_counter() - t0
    return out


def bench_comparison_runtime(
    comparator: GnnModel,
    energy_model: GnnModel,
    circuits: Sequence[Circuit],
    pairs: np.ndarray,
    table: NormTable,
    nm: NoiseModel | None,
    trials: int = 100,
    vqe_trials: int | None = None,
    vqe_iters: int = 200,
    h: PauliHamiltonian | None = None,
) -> dict:
    """Mean/std seconds per pair decision for the three schemes and speedups over VQE.

    Both model schemes include encoding and normalizing the two circuits.
    """
    h = h or h2_hamiltonian()
    vqe_trials = trials if vqe_trials is None else vqe_trials
    pick = lambda t: pairs[t % len(pairs)]  # noqa: E731

    def encode(i):
        return table.apply(circuit_to_graph(circuits[i], nm))

    def direct(t):
        a, b = pick(t)
        direct_compare(comparator, encode(a), encode(b))

    def indirect(t):
        a, b = pick(t)
        indirect_compare(energy_model, encode(a), encode(b))

    def calc(t):
        a, b = pick(t)
        ea = vqe_optimize(circuits[a], h, nm, max_iters=vqe_iters).energy
        eb = vqe_optimize(circuits[b], h, nm, max_iters=vqe_iters).energy
        decide_indirect(ea, eb)

    times = {"direct": _timeit(direct, trials), "indirect": _timeit(indirect, trials), "calculation": _timeit(calc, vqe_trials)}
    base = times["calculation"].mean()
    return {
        k: {"mean": float(v.mean()), "std": float(v.std()), "trials": len(v), "speedup": float(base / v.mean())}
        for k, v in times.items()
    }


def extrapolation_experiment(
    train_n: int,
    eval_ns: Sequence[int],
    noise: str = "none",
    size: int = 40000,
    eval_size: int = 1000,
    p: int = 5,
    epochs: int = 200,
    seed: int = 0,
    control: bool = True,
) -> dict:
    """Train on ``train_n``-qubit circuits with randomly injected wire slots, test on other sizes.

    With ``control`` a second model is trained on the same circuits without
    injection and evaluated at ``train_n``.
    """
    if not eval_ns or max(eval_ns) > MAX_QUBITS:
        raise ConfigError(f"evaluation sizes must lie in 1..{MAX_QUBITS}")
    base = ExperimentConfig(task="single_qubit", n=train_n, p=p, size=size, noise=noise, epochs=epochs, seed=seed)
    out: dict = {"train_n": train_n, "r2": {}}
    inj = replace(base, inject_slots=True)
    res = run_expectation_experiment(inj)
    model, table = res["model"], res["table"]
    for n in eval_ns:
        ecfg = replace(base, n=n, size=eval_size, seed=seed + 1 + n)
        ds = build_expectation_dataset(ecfg)
        gs = GraphSet([table.apply(r.graph) for r in ds.records], [r.target for r in ds.records])
        out["r2"][n] = evaluate_r2(model, gs)
    if control:
        out["control_r2"] = run_expectation_experiment(base)["r2"]
    return out


# ---- recipes and result files ----------------------------------------------------

def _recipes() -> dict[str, ExperimentConfig]:
    r: dict[str, ExperimentConfig] = {}
    for noise, tag in (("none", "noiseless"), ("perth", "perth")):
        for n in (2, 3, 4, 5):
            for p in (5, 7, 9, 11):
                r[f"{tag}_n{n}_p{p}"] = ExperimentConfig("single_qubit", n, p, 20000, noise)
    for n in (12, 14, 16):
        for p in (5, 7, 9):
            r[f"simulated_n{n}_p{p}"] = ExperimentConfig("single_qubit", n, p, 20000, "simulated")
    r["z01_mixed_depth"] = ExperimentConfig("two_qubit", 3, (5, 11), 20000, "none")
    for size in (800, 1000, 2000, 5000, 10000):
        r[f"pool{size}_lagos"] = ExperimentConfig("compare", 4, 1, size, "lagos")
    return r


RECIPES = _recipes()


def results_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
