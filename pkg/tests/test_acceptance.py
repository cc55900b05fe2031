"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL ...`` line (collected again in
the terminal summary). Expectation experiments default to the scaled
protocol (5000 circuits); ``QCGNN_ACCEPTANCE_SCALE=full`` runs 20000.
Generated datasets are cached under ``QCGNN_CACHE`` (default
``.cache/acceptance`` in the repository); models are always retrained.
"""
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from qcgnn.circuit import GateKind
from qcgnn.gnn import GnnModel, make_batch, make_pair_batch
from qcgnn.graph import circuit_to_graph, merge_pair, normalize_features
from qcgnn.noise import NoisePreset, preset
from qcgnn.pipeline import (
    ExperimentConfig,
    bench_comparison_runtime,
    build_dataset,
    cached_dataset,
    extrapolation_experiment,
    run_comparison_experiment,
    run_expectation_experiment,
)
from qcgnn.randgen import GenConfig, generate_pqc, generate_random_circuit
from qcgnn.simulator import channels_for, kraus_completeness, run_density, run_statevector, thermal_relaxation_kraus
from qcgnn.vqe import h2_hamiltonian, vqe_optimize

from conftest import ACCEPTANCE_LINES, dense_state, fd_gradient_check, jitter_biases

FULL = os.environ.get("QCGNN_ACCEPTANCE_SCALE", "scaled") == "full"
SIZE = 20000 if FULL else 5000
R2_NOISELESS = 0.95 if FULL else 0.90
R2_NOISY = 0.90 if FULL else 0.85
CACHE = Path(os.environ.get("QCGNN_CACHE", Path(__file__).parents[1] / ".cache" / "acceptance"))

pytestmark = pytest.mark.acceptance

_results: dict = {}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def dataset(cfg: ExperimentConfig):
    return cached_dataset(cfg, CACHE)


def expectation_run(task: str, p, noise: str, size: int = SIZE):
    cfg = ExperimentConfig(task, 3, p, size, noise, seed=0)
    key = cfg.digest()
    if key not in _results:
        _results[key] = run_expectation_experiment(cfg, dataset(cfg))
    return _results[key]


# ---- 1 ---------------------------------------------------------------------------

def test_criterion_1_simulator_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(200):
        n = 1 + seed % 3
        c = generate_random_circuit(GenConfig(n, depth=1 + seed % 12, seed=10_000 + seed))
        worst = max(worst, float(np.max(np.abs(run_statevector(c).amplitudes - dense_state(c)))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 60
    report(1, ok, f"max |psi - oracle| = {worst:.2e} over 200 circuits in {dt:.1f}s (need <= 1e-10, < 60s)")
    assert ok


# ---- 2 ---------------------------------------------------------------------------

def test_criterion_2_channel_soundness():
    worst_k = 0.0
    for name in (p.value for p in NoisePreset if p is not NoisePreset.NONE):
        nm = preset(name)
        chans = channels_for(nm)
        for q in range(nm.num_qubits):
            sets = []
            for kind in (GateKind.H, GateKind.T, GateKind.RX, GateKind.RY):
                sets += chans.noise_kraus(kind, (q,))
            sets += chans.noise_kraus(GateKind.CNOT, (q, (q + 1) % nm.num_qubits))
            r = nm.qubit(q)
            sets.append(thermal_relaxation_kraus(r.t1, r.t2, nm.durm))
            for ks in sets:
                d = ks[0].shape[0]
                worst_k = max(worst_k, float(np.max(np.abs(kraus_completeness(ks) - np.eye(d)))))
    worst_tr = 0.0
    names = ["perth", "lagos", "nairobi", "jakarta", "simulated"]
    for seed in range(100):
        n = 1 + seed % 5
        if seed % 2:
            c = generate_random_circuit(GenConfig(n, depth=2 + seed % 9, seed=20_000 + seed))
        else:
            c = generate_pqc(GenConfig(max(n, 2), layers=2, seed=20_000 + seed, gate_set="S*"))
        rho = run_density(c, preset(names[seed % 5])).matrix
        worst_tr = max(worst_tr, abs(complex(np.trace(rho)) - 1))
    ok = worst_k <= 1e-10 and worst_tr <= 1e-10
    report(2, ok, f"max |sum K^dag K - I| = {worst_k:.2e}, max |tr rho - 1| = {worst_tr:.2e} (need <= 1e-10)")
    assert ok


# ---- 3 ---------------------------------------------------------------------------

def _small_graphs(count, seed):
    out, s = [], seed
    while len(out) < count:
        c = generate_random_circuit(GenConfig(2, depth=3, seed=s))
        s += 1
        if c.gates:
            out.append(circuit_to_graph(c, preset("perth")))
    return normalize_features(out)[0]


def test_criterion_3_gradient_check():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    gs = _small_graphs(9, 300)
    m = GnnModel.create("expectation", seed=3)
    jitter_biases(m, rng)
    w_e, info_e = fd_gradient_check(m, make_batch(gs[:3]), rng.uniform(size=3))
    c = GnnModel.create("compare", seed=4)
    jitter_biases(c, rng)
    pairs = [merge_pair(gs[3], gs[4]), merge_pair(gs[5], gs[6]), merge_pair(gs[7], gs[8])]
    w_c, info_c = fd_gradient_check(c, make_pair_batch(pairs), rng.uniform(size=3))
    dt = time.perf_counter() - t0
    ok = w_e <= 1.0 and w_c <= 1.0 and dt < 300
    report(3, ok, f"worst error/tolerance expectation {w_e:.3f} ({m.num_parameters} params), "
                  f"compare {w_c:.3f} ({c.num_parameters} params), rtol 1e-4, {dt:.0f}s (need <= 1, < 300s)")
    assert ok, (info_e, info_c)


# ---- 4 / 5 -------------------------------------------------------------------------

def test_criterion_4_noiseless_expectation():
    res = expectation_run("single_qubit", 5, "none")
    ok = res["r2"] >= R2_NOISELESS
    report(4, ok, f"noiseless N=3 P=5 size {SIZE}: test R2 = {res['r2']:.4f} (need >= {R2_NOISELESS})")
    assert ok


def test_criterion_5_noisy_expectation():
    res = expectation_run("single_qubit", 5, "perth")
    ok = res["r2"] >= R2_NOISY
    report(5, ok, f"Perth N=3 P=5 size {SIZE}: test R2 = {res['r2']:.4f} (need >= {R2_NOISY})")
    assert ok


# ---- 6 ---------------------------------------------------------------------------

def test_criterion_6_depth_trend():
    parts, ok = [], True
    for noise in ("none", "perth"):
        r5 = expectation_run("single_qubit", 5, noise)["r2"]
        r11 = expectation_run("single_qubit", 11, noise)["r2"]
        ok &= r5 > r11
        parts.append(f"{noise}: R2(P=5) {r5:.4f} vs R2(P=11) {r11:.4f}")
    report(6, ok, "; ".join(parts) + " (need P=5 > P=11 in both)")
    assert ok


# ---- 7 ---------------------------------------------------------------------------

def test_criterion_7_two_qubit_expectation():
    res = expectation_run("two_qubit", (5, 11), "none")
    ok = res["r2"] >= 0.85
    report(7, ok, f"z01 N=3 P in [5,11] size {SIZE}: test R2 = {res['r2']:.4f} (need >= 0.85)")
    assert ok


# ---- 8 ---------------------------------------------------------------------------

def test_criterion_8_vqe_sanity():
    h = h2_hamiltonian()
    lam = h.ground_energy()
    lowest = math.inf
    for seed in range(100):
        pqc = generate_pqc(GenConfig(4, layers=3, seed=30_000 + seed, gate_set="S*"))
        lowest = min(lowest, vqe_optimize(pqc, h, None, max_iters=200, seed=seed).energy)
    bound_ok = lowest >= lam - 1e-9
    best = math.inf
    for seed in range(10):
        pqc = generate_pqc(GenConfig(4, layers=3, seed=40_000 + seed, gate_set="S*"), p_gate=1.0)
        best = min(best, vqe_optimize(pqc, h, None, max_iters=200, seed=seed).energy)
    ok = bound_ok and best - lam <= 0.05
    report(8, ok, f"lambda_min {lam:.6f}; lowest of 100 runs {lowest:.6f} (bound ok: {bound_ok}); "
                  f"best dense PQC of 10 seeds {best:.6f}, gap {best - lam:.4f} Ha (need <= 0.05)")
    assert ok


# ---- 9 / 10 ------------------------------------------------------------------------

POOL_CFG = ExperimentConfig("compare", 4, 1, 2000, "lagos", seed=0)


def comparison_run():
    if "compare" not in _results:
        ds = dataset(POOL_CFG)
        _results["compare"] = (ds, run_comparison_experiment(POOL_CFG, ds))
    return _results["compare"]


def test_criterion_9_direct_beats_indirect():
    _, res = comparison_run()
    d, i = res["direct_accuracy"], res["indirect_accuracy"]
    ok = d - i >= 0.10 and d >= 0.65
    report(9, ok, f"pool 2000 Lagos: direct {d:.4f}, indirect {i:.4f}, gap {d - i:+.4f} over "
                  f"{res['test_pairs'] - res['ties']} test pairs (need gap >= 0.10, direct >= 0.65)")
    assert ok


def test_criterion_10_runtime_ordering():
    ds, res = comparison_run()
    circuits = [r.circuit for r in ds.records]
    bench = bench_comparison_runtime(
        res["comparator"], res["energy_model"], circuits, ds.pairs["test"], res["table"],
        POOL_CFG.noise_model, trials=100, vqe_iters=POOL_CFG.vqe_iters,
    )
    sd, si = bench["direct"]["speedup"], bench["indirect"]["speedup"]
    ok = sd >= 100 and si >= 100 and bench["calculation"]["speedup"] == 1.0
    report(10, ok, f"speedup over 200-iteration VQE pair: direct {sd:.0f}x, indirect {si:.0f}x "
                   f"(VQE pair {bench['calculation']['mean']:.3f}s; need >= 100x)")
    assert ok


# ---- 11 --------------------------------------------------------------------------

def test_criterion_11_determinism():
    cfg = ExperimentConfig("single_qubit", 3, 5, SIZE, "none", seed=0)
    first = expectation_run("single_qubit", 5, "none")
    fresh = build_dataset(cfg)
    same_data = [r.to_json() for r in fresh.records] == [r.to_json() for r in dataset(cfg).records]
    again = run_expectation_experiment(cfg, fresh)
    diff = abs(again["r2"] - first["r2"])
    ok = same_data and diff <= 1e-6
    report(11, ok, f"rebuilt dataset identical: {same_data}; rerun R2 {again['r2']:.10f} vs "
                   f"{first['r2']:.10f}, |diff| = {diff:.1e} (need <= 1e-6)")
    assert ok


# ---- extrapolation property check --------------------------------------------------

def test_extrapolation_property():
    control = expectation_run("single_qubit", 5, "none")["r2"]
    res = extrapolation_experiment(3, [3, 5], noise="none", size=SIZE, eval_size=1000, p=5, control=False)
    r_same, r_up = res["r2"][3], res["r2"][5]
    ok = abs(r_same - control) <= 0.05 and r_up > 0
    line = (f"extrapolation: injected-slot model R2 at N=3 {r_same:.4f} vs control {control:.4f}; "
            f"R2 at N=5 {r_up:.4f} (need within 0.05 and > 0)")
    ACCEPTANCE_LINES.append(f"property X: {'PASS' if ok else 'FAIL'} {line}")
    print(line)
    assert ok
