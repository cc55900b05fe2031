import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcgnn.gnn import GnnModel
from qcgnn.graph import circuit_to_graph
from qcgnn.pipeline import (
    RECIPES,
    SPLITS,
    ConfigError,
    Dataset,
    DatasetRecord,
    DegenerateTargetsError,
    EnergyNorm,
    ExperimentConfig,
    GraphSet,
    TrainConfig,
    TrainingError,
    assign_splits,
    build_expectation_dataset,
    build_pair_dataset,
    cached_dataset,
    comparison_accuracy,
    decide_direct,
    decide_indirect,
    evaluate_r2,
    indirect_compare,
    injection_map,
    load_config,
    match_pairs,
    pair_label,
    pair_set,
    prepare,
    r2_score,
    rank_pool,
    run_comparison_experiment,
    run_expectation_experiment,
    split_sizes,
    train,
    true_winners,
)
from qcgnn.randgen import GenConfig, generate_random_circuit, stream
from qcgnn.simulator import expectation_z, rescale_single, run_statevector


@pytest.fixture(scope="module")
def small_ds():
    return build_expectation_dataset(ExperimentConfig("single_qubit", 3, 5, 100, "perth", seed=7))


@pytest.fixture(scope="module")
def pool_ds():
    return build_pair_dataset(40, "lagos", seed=3, vqe_iters=25, epochs=3, batch=16)


# ---- configuration --------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(task="bogus")
    with pytest.raises(ConfigError):
        ExperimentConfig(task="compare", n=3)
    with pytest.raises(ConfigError):
        ExperimentConfig(n=(5, 2))
    with pytest.raises(ConfigError):
        ExperimentConfig(n=12, noise="perth")
    with pytest.raises(ConfigError):
        ExperimentConfig(noise="mars")
    with pytest.raises(ConfigError):
        ExperimentConfig(task="two_qubit", n=1)
    assert ExperimentConfig(task="compare", n=4).gate_set == "S*"
    assert ExperimentConfig().gate_set == "S"


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig("two_qubit", 3, (5, 11), 50, "none", seed=2)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg
    path.write_text(json.dumps({"sizee": 3}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_recipes_cover_tables():
    assert RECIPES["noiseless_n3_p5"].size == 20000
    assert RECIPES["perth_n3_p5"].noise == "perth"
    assert RECIPES["simulated_n16_p9"].noise == "simulated"
    assert {RECIPES[f"pool{s}_lagos"].size for s in (800, 1000, 2000, 5000, 10000)} == {800, 1000, 2000, 5000, 10000}
    assert RECIPES["z01_mixed_depth"].p == (5, 11)


# ---- splits --------------------------------------------------------------------

def test_split_sizes_examples():
    assert split_sizes(100) == (70, 20, 10)
    assert split_sizes(20000) == (14000, 4000, 2000)


@settings(max_examples=50, deadline=None)
@given(size=st.integers(1, 3000), seed=st.integers(0, 2**32))
def test_splits_partition(size, seed):
    s = assign_splits(size, seed)
    assert len(s) == size and set(s) <= set(SPLITS)
    counts = tuple(s.count(k) for k in SPLITS)
    assert counts == split_sizes(size)
    assert s == assign_splits(size, seed)


# ---- expectation datasets --------------------------------------------------------

def test_expectation_dataset_example(small_ds):
    assert len(small_ds.records) == 100
    assert small_ds.counts() == {"train": 70, "val": 20, "test": 10}
    for r in small_ds.records:
        assert 0.0 <= r.target <= 1.0
        assert r.graph.key.sum() == len(r.circuit.gates) > 0


def test_noiseless_targets_match_simulator_and_sit_on_grid():
    ds = build_expectation_dataset(ExperimentConfig("single_qubit", 3, 5, 60, "none", seed=1))
    targets = []
    for r in ds.records:
        want = rescale_single(expectation_z(run_statevector(r.circuit), 0))
        assert r.target == pytest.approx(want, abs=1e-12)
        targets.append(round(r.target, 9))
    # Clifford+T amplitudes give a handful of discrete values
    assert len(set(targets)) <= 8


def test_two_qubit_targets():
    ds = build_expectation_dataset(ExperimentConfig("two_qubit", 3, (5, 11), 20, "none", seed=4, out_dim=2))
    for r in ds.records:
        assert len(r.target) == 2 and all(0 <= t <= 1 for t in r.target)
        assert 5 <= r.meta["P"] <= 11


def test_dataset_is_deterministic(small_ds):
    again = build_expectation_dataset(small_ds.config)
    assert [r.to_json() for r in again.records] == [r.to_json() for r in small_ds.records]


def test_dataset_save_load(tmp_path, small_ds):
    small_ds.save(tmp_path)
    lines = (tmp_path / "dataset.jsonl").read_text().splitlines()
    assert len(lines) == 100
    first = json.loads(lines[0])
    assert list(first)[:6] == ["nodes", "edges", "key", "globals", "target", "meta"]
    back = Dataset.load(tmp_path)
    assert back.config == small_ds.config
    assert [r.to_json() for r in back.records] == [r.to_json() for r in small_ds.records]
    assert DatasetRecord.from_json(lines[0]).to_json() == lines[0]


def test_cached_dataset(tmp_path):
    cfg = ExperimentConfig("single_qubit", 2, 3, 12, "none", seed=5)
    a = cached_dataset(cfg, tmp_path)
    b = cached_dataset(cfg, tmp_path)
    assert [r.to_json() for r in a.records] == [r.to_json() for r in b.records]
    assert not list(tmp_path.glob("*.partial"))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 16), seed=st.integers(0, 2**32))
def test_injection_map_is_injective(n, seed):
    m = injection_map(n, stream(seed))
    assert len(set(m)) == n and m[0] == 0 and max(m) < 16


# ---- pools and pairs ------------------------------------------------------------

def test_pair_label_examples():
    assert pair_label(0.3, 0.3) == 0.5
    assert pair_label(0.0, 1.0) == 1.0
    assert pair_label(1.0, 0.0) == 0.0


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0, 1), b=st.floats(0, 1))
def test_pair_label_antisymmetric(a, b):
    assert pair_label(a, b) + pair_label(b, a) == pytest.approx(1.0, abs=1e-15)
    if abs(a - b) > 1e-12:
        assert (pair_label(a, b) > 0.5) == (a < b)


def test_match_pairs_covers_each_index_once_per_round():
    pairs = match_pairs(list(range(10)), 2, stream(0))
    assert pairs.shape == (10, 2)
    counts = np.bincount(pairs.ravel(), minlength=10)
    assert counts.tolist() == [2] * 10
    assert np.all(pairs[:, 0] != pairs[:, 1])


def test_pool_dataset(pool_ds):
    assert len(pool_ds.records) == 40
    targets = np.array([r.target for r in pool_ds.records])
    assert targets.min() == 0.0 and targets.max() == 1.0
    assert not pool_ds.info["degenerate"]
    split = {i: r.split for i, r in enumerate(pool_ds.records)}
    for s in SPLITS:
        for a, b in pool_ds.pairs[s]:
            assert split[a] == split[b] == s
    assert pool_ds.records[0].meta["optimizer"] == "COBYLA"
    assert all(r.circuit.gate_set.value == "S*" for r in pool_ds.records)


def test_pool_labels_antisymmetric(pool_ds):
    prep = prepare(pool_ds)
    ps = pair_set(prep, "train", both_orders=True)
    half = len(ps) // 2
    assert np.allclose(ps.targets[:half] + ps.targets[half:], 1.0, atol=1e-15)


def test_pool_save_load(tmp_path, pool_ds):
    pool_ds.save(tmp_path)
    back = Dataset.load(tmp_path)
    for s in SPLITS:
        assert np.array_equal(back.pairs[s], pool_ds.pairs[s])


def test_degenerate_energy_norm():
    norm = EnergyNorm(1.0, 1.0)
    assert norm.apply(1.0) == 0.0
    assert pair_label(norm.apply(1.0), norm.apply(1.0)) == 0.5


# ---- metrics and decisions ------------------------------------------------------

def test_r2_examples():
    y = np.array([0.1, 0.5, 0.9])
    assert r2_score(y, y) == 1.0
    assert r2_score(y, np.full(3, y.mean())) == pytest.approx(0.0, abs=1e-15)
    assert r2_score([0, 1], [1, 0]) == -3.0
    with pytest.raises(DegenerateTargetsError):
        r2_score([0.4, 0.4], [0.1, 0.2])


def test_r2_sums_over_outputs():
    y = np.array([[0.0, 1.0], [1.0, 0.0]])
    yhat = np.array([[0.0, 1.0], [1.0, 0.5]])
    # overall mean 0.5, SS_tot = 1, SS_res = 0.25
    assert r2_score(y, yhat) == pytest.approx(0.75)


def test_decision_rules():
    assert decide_indirect(0.2, 0.7) == "A"
    assert decide_indirect(0.7, 0.2) == "B"
    assert decide_indirect(0.4, 0.4) == "A"
    assert decide_direct(0.82) == "A"
    assert decide_direct(0.31) == "B"
    assert decide_direct(0.5) == "A"


@settings(max_examples=50, deadline=None)
@given(i=st.integers(-320, 320), j=st.integers(-320, 320))
def test_indirect_decision_monotone_invariant(i, j):
    a, b = i / 64, j / 64  # exact grid so the transforms cannot merge distinct values
    assert decide_indirect(a, b) == decide_indirect(math.exp(a), math.exp(b))
    assert decide_indirect(a, b) == decide_indirect(3 * a + 1, 3 * b + 1)


def test_indirect_compare_identical_inputs():
    g = circuit_to_graph(generate_random_circuit(GenConfig(3, depth=4, seed=1)))
    assert indirect_compare(GnnModel.create(), g, g) == "A"


def test_accuracy_examples():
    energies = [0.1, 0.5, 0.5, 0.9]
    pairs = np.array([[0, 1], [1, 2], [3, 0], [2, 3]])
    truth = true_winners(energies, pairs)
    assert truth == ["A", None, "B", "A"]
    assert comparison_accuracy(truth, truth) == (1.0, 1)
    # oracle indirect scheme on true energies
    oracle = [decide_indirect(energies[a], energies[b]) for a, b in pairs]
    assert comparison_accuracy(oracle, truth) == (1.0, 1)
    assert comparison_accuracy(["B", "A", "A", "A"], truth) == (pytest.approx(1 / 3), 1)


def test_coin_flip_accuracy_near_half():
    rng = np.random.default_rng(0)
    m = 4000
    e = rng.uniform(size=2 * m)
    pairs = np.arange(2 * m).reshape(-1, 2)
    guess = ["A" if x else "B" for x in rng.integers(0, 2, size=m)]
    acc, _ = comparison_accuracy(guess, true_winners(e, pairs))
    assert abs(acc - 0.5) <= 3 / math.sqrt(m)


def test_rank_pool_examples():
    assert rank_pool(lambda a, b: "A", ["x"]) == ([0], 0)
    pick = lambda a, b: decide_indirect(a, b)  # noqa: E731
    order, count = rank_pool(pick, [0.9, 0.1])
    assert order == [1, 0] and count == 1


@settings(max_examples=50, deadline=None)
@given(energies=st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=30, unique=True))
def test_rank_pool_with_oracle_equals_sort(energies):
    order, count = rank_pool(decide_indirect, energies)
    assert order == sorted(range(len(energies)), key=lambda i: energies[i])
    n = len(energies)
    assert count <= n * (n - 1) // 2


def test_rank_pool_worst_case_count():
    energies = list(range(10, 0, -1))
    _, count = rank_pool(decide_indirect, energies)
    assert count == 45


# ---- training -------------------------------------------------------------------

def test_train_is_deterministic_and_finite(small_ds):
    prep = prepare(small_ds)
    tc = TrainConfig(epochs=3, batch=32, seed=1)
    runs = [train(GnnModel.create(seed=1), prep.graph_set("train"), prep.graph_set("val"), tc) for _ in range(2)]
    assert runs[0].history == runs[1].history
    assert all(math.isfinite(r["val_loss"]) for r in runs[0].history)
    m0, m1 = runs[0].model.params, runs[1].model.params
    assert all(np.array_equal(m0[k], m1[k]) for k in m0)


def test_train_aborts_on_nan(small_ds):
    prep = prepare(small_ds)
    bad = prep.graph_set("train")
    bad.targets[0, 0] = np.nan
    with pytest.raises(TrainingError):
        train(GnnModel.create(), bad, None, TrainConfig(epochs=1, batch=16))


def test_norm_table_fit_on_train_only(small_ds):
    prep = prepare(small_ds)
    train_x = np.vstack([r.graph.x for r in small_ds.split("train")])
    assert np.array_equal(prep.table.xmax, train_x.max(axis=0))


def test_expectation_experiment_small(small_ds):
    cfg = ExperimentConfig("single_qubit", 3, 5, 100, "perth", seed=7, epochs=2, batch=32)
    res = run_expectation_experiment(cfg, small_ds)
    assert len(res["history"]) == 2
    assert res["r2"] == pytest.approx(r2_score(res["targets"], res["predictions"]), abs=1e-15)
    prep = prepare(small_ds)
    gs = GraphSet([prep.graphs[i] for i in small_ds.indices("test")], res["targets"])
    assert evaluate_r2(res["model"], gs) == pytest.approx(res["r2"], abs=1e-12)


def test_comparison_experiment_small(pool_ds):
    res = run_comparison_experiment(pool_ds.config, pool_ds)
    assert 0.0 <= res["direct_accuracy"] <= 1.0 and 0.0 <= res["indirect_accuracy"] <= 1.0
    assert res["test_pairs"] == len(pool_ds.pairs["test"])
    assert len(res["history_compare"]) == pool_ds.config.epochs
