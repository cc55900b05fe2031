"""Command-line entry point: ``qcgnn <command> [flags]``.

Exit codes: 0 success, 2 invalid configuration or input, 1 runtime failure.
Each command that writes files puts them under ``--out`` together with a
``manifest.json`` {command, args, seed, files: [{path, sha256}]} written last.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .circuit import CircuitError, read_circuits
from .gnn import GnnModel, load_checkpoint, save_checkpoint
from .graph import NormTable, circuit_to_graph
from .noise import NoiseModel, NoiseModelError, load_noise_model, preset, resolve
from .pipeline import (
    ConfigError,
    Dataset,
    DegenerateTargetsError,
    EnergyNorm,
    ExperimentConfig,
    GraphSet,
    TrainConfig,
    bench_comparison_runtime,
    build_dataset,
    comparison_accuracy,
    decide_direct,
    decide_indirect,
    default_jobs,
    direct_winners,
    indirect_winners,
    load_config,
    pair_set,
    predict_graphs,
    prepare,
    r2_score,
    rank_pool,
    results_csv,
    sha256_file,
    train,
    true_winners,
)
from .pipeline import _predict_set as predict_set
from .vqe import HamiltonianError, h2_hamiltonian, load_hamiltonian, vqe_optimize

USAGE_ERRORS = (ConfigError, CircuitError, NoiseModelError, HamiltonianError, FileNotFoundError, json.JSONDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage text on stderr, exit 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---- output helpers ------------------------------------------------------------

class Output:
    def __init__(self, out: str | None, command: str, args: dict, seed):
        self.dir = Path(out) if out else None
        self.command, self.args, self.seed = command, args, seed
        self.files: list[Path] = []
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
            (self.dir / "manifest.json").unlink(missing_ok=True)

    def path(self, name: str) -> Path:
        if self.dir is None:
            raise ConfigError("this command needs --out")
        return self.dir / name

    def add(self, *paths: Path):
        self.files.extend(Path(p) for p in paths)

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text)
        self.add(p)
        return p

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=1, sort_keys=True) + "\n")

    def finish(self):
        if self.dir is None:
            return
        manifest = {
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "files": [{"path": str(p.relative_to(self.dir)), "sha256": sha256_file(p)} for p in self.files],
        }
        tmp = self.dir / "manifest.json.partial"
        tmp.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        tmp.rename(self.dir / "manifest.json")


def _noise_arg(value: str | None) -> NoiseModel | None:
    if value is None:
        return None
    if Path(value).suffix == ".json" and Path(value).exists():
        return load_noise_model(value)
    try:
        return resolve(value)
    except ValueError as exc:
        raise ConfigError(f"unknown noise preset {value!r}") from exc


def _range_arg(text: str):
    parts = str(text).replace(":", "-").split("-")
    try:
        vals = [int(x) for x in parts if x != ""]
    except ValueError as exc:
        raise ConfigError(f"expected an integer or lo-hi range, got {text!r}") from exc
    if len(vals) == 1:
        return vals[0]
    if len(vals) == 2:
        return tuple(vals)
    raise ConfigError(f"expected an integer or lo-hi range, got {text!r}")


def _load_model(path) -> tuple[GnnModel, dict, NormTable | None]:
    model, meta = load_checkpoint(path)
    table = NormTable.from_dict(meta["normalization"]) if meta.get("normalization") else None
    return model, meta, table


def _encode(circuits, nm, table):
    gs = [circuit_to_graph(c, nm) for c in circuits]
    return [table.apply(g) for g in gs] if table is not None else gs


def _checkpoint_noise(meta) -> NoiseModel | None:
    return resolve(meta.get("training", {}).get("config", {}).get("noise", "none"))


# ---- commands ------------------------------------------------------------------

_CFG_FLAGS = ("task", "n", "p", "size", "noise", "epochs", "lr", "batch", "seed", "out_dim",
              "pqc_layers", "vqe_iters", "pairs_per_circuit", "inject_slots")


def _experiment_config(a) -> ExperimentConfig:
    base = load_config(a.config).to_dict() if a.config else {}
    for k in _CFG_FLAGS:
        v = getattr(a, k, None)
        if v is not None:
            base[k] = _range_arg(v) if k in ("n", "p") else v
    if base.get("task") == "single":
        base["task"] = "single_qubit"
    if base.get("task") == "two":
        base["task"] = "two_qubit"
    return ExperimentConfig.from_dict(base)


def cmd_gen_data(a, out: Output):
    cfg = _experiment_config(a)
    out.seed = cfg.seed
    if out.dir is None:
        raise ConfigError("gen-data needs --out")
    ds = build_dataset(cfg, jobs=a.jobs or default_jobs())
    out.add(*ds.save(out.dir))
    c = ds.counts()
    print(f"{len(ds.records)} records (train {c['train']}, val {c['val']}, test {c['test']}) -> {out.dir}")


def cmd_train(a, out: Output):
    ds = Dataset.load(a.data)
    cfg = ds.config
    over = {k: getattr(a, k) for k in ("epochs", "lr", "batch", "seed") if getattr(a, k) is not None}
    cfg = replace(cfg, **over)
    out.seed = cfg.seed
    if out.dir is None:
        raise ConfigError("train needs --out")
    arch = a.arch or ("compare" if cfg.task == "compare" else "expectation")
    if arch == "compare" and ds.pairs is None:
        raise ConfigError("comparator training needs a pair (compare-task) dataset")
    prep = prepare(ds)
    tc = TrainConfig(cfg.epochs, cfg.lr, cfg.batch, cfg.seed)
    if arch == "compare":
        model = GnnModel.create("compare", seed=cfg.seed)
        tr, va = pair_set(prep, "train", True), pair_set(prep, "val", True)
    else:
        model = GnnModel.create("expectation", out_dim=cfg.out_dim, seed=cfg.seed)
        tr, va = prep.graph_set("train"), prep.graph_set("val")

    def log(row):
        if not a.quiet:
            print(json.dumps(row), flush=True)

    res = train(model, tr, va, tc, log)
    training = {"config": cfg.to_dict(), "dataset": str(a.data), "epochs_run": len(res.history)}
    ckpt = out.path("model.ckpt")
    save_checkpoint(ckpt, res.model, prep.table.to_dict(), ds.info.get("energy_norm"), training)
    out.add(ckpt)
    out.write_json("norm.json", prep.table.to_dict())
    cols = ["epoch", "train_loss", "val_loss"]
    out.write_text("history.csv", results_csv(res.history, cols))


def cmd_eval(a, out: Output):
    model, meta, table = _load_model(a.model)
    ds = Dataset.load(a.data)
    if table is None:
        raise ConfigError("checkpoint has no normalization table")
    graphs = [table.apply(r.graph) for r in ds.records]
    idx = ds.indices(a.split)
    result: dict = {"split": a.split, "records": len(idx)}
    if model.config.arch == "compare":
        if ds.pairs is None:
            raise ConfigError("comparator evaluation needs a compare-task dataset")
        pairs = ds.pairs[a.split]
        truth = true_winners([r.meta["energy"] for r in ds.records], pairs)
        acc, ties = comparison_accuracy(direct_winners(model, graphs, pairs), truth)
        result.update(accuracy=acc, ties=ties, pairs=int(len(pairs)))
        print(f"accuracy {acc!r}")
    else:
        gs = GraphSet([graphs[i] for i in idx], [ds.records[i].target for i in idx])
        pred = predict_set(model, gs)
        try:
            r2 = r2_score(gs.targets, pred)
        except DegenerateTargetsError:
            r2 = None
        result["r2"] = r2
        if ds.pairs is not None:
            pairs = ds.pairs[a.split]
            truth = true_winners([r.meta["energy"] for r in ds.records], pairs)
            acc, ties = comparison_accuracy(indirect_winners(model, graphs, pairs), truth)
            result.update(indirect_accuracy=acc, ties=ties)
        print("r2 undefined (zero target variance)" if r2 is None else f"r2 {r2!r}")
        if out.dir is not None:
            rows = [{"record": i, "target": json.dumps(ds.records[i].target), "prediction": json.dumps(pred[k].tolist())}
                    for k, i in enumerate(idx)]
            out.write_text("predictions.csv", results_csv(rows, ["record", "target", "prediction"]))
    if out.dir is not None:
        out.write_json("eval.json", result)


def _circuits(a):
    cs = read_circuits(a.circuits)
    if not cs:
        raise ConfigError(f"{a.circuits}: no circuits")
    return cs


def cmd_predict(a, out: Output):
    model, meta, table = _load_model(a.model)
    if model.config.arch != "expectation":
        raise ConfigError("predict needs an expectation/energy checkpoint")
    cs = _circuits(a)
    nm = _noise_arg(a.noise) if a.noise else _checkpoint_noise(meta)
    pred = predict_graphs(model, _encode(cs, nm, table))
    rows = []
    tnorm = EnergyNorm.from_dict(meta["target_normalization"]) if meta.get("target_normalization") else None
    for i, p in enumerate(pred):
        row = {"circuit": i, "prediction": json.dumps(p.tolist())}
        if tnorm is not None:
            row["energy"] = repr(tnorm.lo + float(p[0]) * (tnorm.hi - tnorm.lo))
        rows.append(row)
    text = results_csv(rows, ["circuit", "prediction"] + (["energy"] if tnorm else []))
    sys.stdout.write(text)
    if out.dir is not None:
        out.write_text("predictions.csv", text)


def cmd_compare(a, out: Output):
    model, meta, table = _load_model(a.model)
    cs = _circuits(a)
    if len(cs) != 2:
        raise ConfigError("compare needs a circuit file with exactly two circuits (A then B)")
    nm = _noise_arg(a.noise) if a.noise else _checkpoint_noise(meta)
    ga, gb = _encode(cs, nm, table)
    if model.config.arch == "compare":
        from .gnn import make_pair_batch
        from .graph import merge_pair

        prob = float(model.forward(make_pair_batch([merge_pair(ga, gb)]))[0, 0])
        result = {"scheme": "direct", "probability_a": prob, "winner": decide_direct(prob)}
    else:
        ea, eb = predict_graphs(model, [ga, gb])[:, 0]
        result = {"scheme": "indirect", "energy_a": float(ea), "energy_b": float(eb), "winner": decide_indirect(ea, eb)}
    print(json.dumps(result))
    if out.dir is not None:
        out.write_json("compare.json", result)


def cmd_rank(a, out: Output):
    model, meta, table = _load_model(a.model)
    if model.config.arch != "compare":
        raise ConfigError("rank needs a comparator checkpoint")
    cs = _circuits(a)
    nm = _noise_arg(a.noise) if a.noise else _checkpoint_noise(meta)
    gs = _encode(cs, nm, table)
    from .pipeline import direct_compare

    order, count = rank_pool(lambda x, y: direct_compare(model, x, y), gs)
    result = {"order": order, "comparisons": count}
    print(json.dumps(result))
    if out.dir is not None:
        out.write_json("rank.json", result)


def cmd_vqe_run(a, out: Output):
    h = load_hamiltonian(a.hamiltonian) if a.hamiltonian else h2_hamiltonian()
    nm = _noise_arg(a.noise)
    cs = _circuits(a)
    rows = []
    for i, c in enumerate(cs):
        seed = None if a.seed is None else a.seed + i
        res = vqe_optimize(c, h, nm, max_iters=a.iters, seed=seed)
        rows.append({"circuit": i, "energy": res.energy, "evaluations": res.iterations_used, "params": res.params.tolist()})
        print(json.dumps({"circuit": i, "energy": res.energy, "evaluations": res.iterations_used}))
    if out.dir is not None:
        out.write_json("vqe.json", {"ground_energy": h.ground_energy(), "results": rows})


def cmd_bench(a, out: Output):
    if a.what == "kernels":
        from .benchmarks import bench_kernels

        result = bench_kernels(repeats=a.trials)
    else:
        if not (a.comparator and a.energy_model and a.data):
            raise ConfigError("bench comparison needs --comparator, --energy-model and --data")
        comp, _, table = _load_model(a.comparator)
        energy, _, _ = _load_model(a.energy_model)
        ds = Dataset.load(a.data)
        if ds.pairs is None:
            raise ConfigError("bench comparison needs a compare-task dataset")
        circuits = [r.circuit for r in ds.records]
        result = bench_comparison_runtime(comp, energy, circuits, ds.pairs["test"], table, ds.config.noise_model,
                                          trials=a.trials, vqe_trials=a.vqe_trials, vqe_iters=ds.config.vqe_iters)
    print(json.dumps(result, indent=1, sort_keys=True))
    if out.dir is not None:
        out.write_json("bench.json", result)


def cmd_dump_noise(a, out: Output):
    text = json.dumps(preset(a.preset).to_dict(), indent=1) + "\n"
    sys.stdout.write(text)
    if out.dir is not None:
        out.write_text(f"noise-{a.preset}.json", text)


def cmd_dump_hamiltonian(a, out: Output):
    h = h2_hamiltonian()
    text = h.to_json() + "\n"
    sys.stdout.write(text)
    if out.dir is not None:
        out.write_text("hamiltonian.json", text)


# ---- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qcgnn", description="Circuit-property prediction with graph attention networks.")
    p.add_argument("--version", action="version", version=f"qcgnn {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, seed_default=None):
        sp.add_argument("--seed", type=int, default=seed_default)
        sp.add_argument("--out", default=None, help="output directory (receives manifest.json)")
        sp.add_argument("--config", default=None, help="JSON config file; flags override it")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: available cores)")

    s = sub.add_parser("gen-data", help="generate and label a dataset")
    common(s)
    s.add_argument("--task", choices=["single", "two", "single_qubit", "two_qubit", "energy", "compare"])
    s.add_argument("--n", help="qubits, or lo-hi range")
    s.add_argument("--p", help="depth, or lo-hi range")
    s.add_argument("--size", type=int)
    s.add_argument("--noise")
    s.add_argument("--out-dim", dest="out_dim", type=int)
    s.add_argument("--pqc-layers", dest="pqc_layers", type=int)
    s.add_argument("--vqe-iters", dest="vqe_iters", type=int)
    s.add_argument("--pairs-per-circuit", dest="pairs_per_circuit", type=int)
    s.add_argument("--inject-slots", dest="inject_slots", action="store_const", const=True)
    s.set_defaults(fn=cmd_gen_data)

    s = sub.add_parser("train", help="train a model on a generated dataset")
    common(s)
    s.add_argument("--data", required=True)
    s.add_argument("--arch", choices=["expectation", "compare"])
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--batch", type=int)
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("eval", help="R^2 (or pair accuracy) of a checkpoint on a dataset split")
    common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", default="test", choices=["train", "val", "test"])
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("predict", help="predict targets for circuits in a JSON-lines file")
    common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--circuits", required=True)
    s.add_argument("--noise")
    s.set_defaults(fn=cmd_predict)

    s = sub.add_parser("compare", help="decide which of two circuits reaches the lower energy")
    common(s)
    s.add_argument("--model", required=True, help="comparator (direct) or energy model (indirect)")
    s.add_argument("--circuits", required=True)
    s.add_argument("--noise")
    s.set_defaults(fn=cmd_compare)

    s = sub.add_parser("rank", help="bubble-sort a pool of circuits with a comparator")
    common(s)
    s.add_argument("--model", required=True)
    s.add_argument("--circuits", required=True)
    s.add_argument("--noise")
    s.set_defaults(fn=cmd_rank)

    s = sub.add_parser("vqe-run", help="run VQE on PQCs from a JSON-lines file")
    common(s)
    s.add_argument("--circuits", required=True)
    s.add_argument("--noise")
    s.add_argument("--iters", type=int, default=200)
    s.add_argument("--hamiltonian", default=None)
    s.set_defaults(fn=cmd_vqe_run)

    s = sub.add_parser("bench", help="kernel or comparison-scheme timings")
    common(s)
    s.add_argument("--what", choices=["kernels", "comparison"], default="kernels")
    s.add_argument("--comparator")
    s.add_argument("--energy-model", dest="energy_model")
    s.add_argument("--data")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--vqe-trials", dest="vqe_trials", type=int, default=None)
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("dump-noise", help="print a noise preset as JSON")
    common(s)
    s.add_argument("--preset", required=True, choices=["perth", "lagos", "nairobi", "jakarta", "simulated"])
    s.set_defaults(fn=cmd_dump_noise)

    s = sub.add_parser("dump-hamiltonian", help="print the bundled H2 Hamiltonian as JSON")
    common(s)
    s.set_defaults(fn=cmd_dump_hamiltonian)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.command is None:
            parser.print_usage(sys.stderr)
            print("qcgnn: error: a command is required", file=sys.stderr)
            return 2
        if a.jobs is not None and a.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        args = {k: v for k, v in vars(a).items() if k != "fn"}
        out = Output(a.out, a.command, args, a.seed)
        a.fn(a, out)
        out.finish()
        return 0
    except UsageError as exc:
        print(f"qcgnn: error: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        print(f"qcgnn: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        if isinstance(exc, DegenerateTargetsError):
            print(f"qcgnn: error: {exc}", file=sys.stderr)
            return 1
        print(f"qcgnn: error: invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"qcgnn: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
