import numpy as np
import pytest

from plmgraph import egnn, embedio, graphbuild, trainer
from plmgraph.errors import ChainTooLong, ConfigError, GenerationFailed


def small_graphs(count=8, length=24, seed=3, k=6):
    return [
        graphbuild.build_knn(s, k)
        for s in trainer.synth_dataset(count, length, seed)
    ]


def with_positional(graphs):
    dim = max(g.n for g in graphs)
    return [
        graphbuild.attach_features(
            g, embedio.synth_positional(g.n, dim, "onehot_index").data, "replace"
        )
        for g in graphs
    ]


# --- labels ---

def test_apr_labels():
    g = small_graphs(count=1, length=5)[0]
    np.testing.assert_array_equal(trainer.label_apr(g), [0, 1, 2, 3, 4])


def test_apr_single_node_graph():
    g = graphbuild.ResidueGraph(
        coords=np.zeros((1, 3)),
        node_feats=np.eye(21)[:1],
        edges=np.zeros((0, 2), dtype=np.int64),
        edge_scalars=np.zeros(0),
        mode="knn",
    )
    np.testing.assert_array_equal(trainer.label_apr(g), [0])


def test_apr_chain_too_long():
    g = small_graphs(count=1, length=5)[0]
    with pytest.raises(ChainTooLong):
        trainer.label_apr(g, l_max=4)


def test_rpe_labels_symmetric():
    g5 = small_graphs(count=1, length=5)[0]
    np.testing.assert_array_equal(trainer.label_rpe(g5), [0, 1, 2, 1, 0])
    g2 = small_graphs(count=1, length=2)[0]
    np.testing.assert_array_equal(trainer.label_rpe(g2), [0, 0])
    g7 = small_graphs(count=1, length=7)[0]
    assert trainer.label_rpe(g7)[3] == 3.0


# --- synthetic chains ---

def test_chain_spacing_exact():
    s = trainer.synth_chain(60, 11)
    coords = np.array([r.ca for r in s.chains[0].residues])
    steps = np.linalg.norm(np.diff(coords, axis=0), axis=1)
    assert np.max(np.abs(steps - 3.8)) < 0.01


def test_chain_deterministic():
    assert trainer.synth_chain(30, 5) == trainer.synth_chain(30, 5)
    assert trainer.synth_chain(30, 5) != trainer.synth_chain(30, 6)


def test_chain_self_avoiding():
    s = trainer.synth_chain(100, 23)
    coords = np.array([r.ca for r in s.chains[0].residues])
    # brute-force check over all non-consecutive pairs
    d = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
    n = len(coords)
    for i in range(n):
        for j in range(i + 2, n):
            assert d[i, j] >= 3.0


def test_chain_rejects_tiny():
    with pytest.raises(ConfigError):
        trainer.synth_chain(1, 0)


def test_generation_failed_bounded():
    with pytest.raises(GenerationFailed):
        trainer.synth_chain(50, 0, max_restarts=0)


# --- splits ---

def test_split_disjoint_cover():
    train, val, test = trainer.split_indices(50, (0.8, 0.1, 0.1), 7)
    assert (len(train), len(val), len(test)) == (40, 5, 5)
    assert sorted(train + val + test) == list(range(50))


def test_split_fraction_validation():
    with pytest.raises(ConfigError):
        trainer.split_indices(10, (0.5, 0.2, 0.2), 0)


def test_split_deterministic():
    assert trainer.split_indices(20, (0.6, 0.2, 0.2), 3) == trainer.split_indices(
        20, (0.6, 0.2, 0.2), 3
    )


# --- training ---

def quick_cfg(**kw):
    kw.setdefault("epochs", 3)
    kw.setdefault("learning_rate", 3e-3)
    kw.setdefault("batch_size", 2)
    kw.setdefault("seed", 5)
    kw.setdefault("split", (0.5, 0.25, 0.25))
    return trainer.TrainConfig(**kw)


def model_cfg(task_kind, in_dim, l_max=32, hidden=24, layers=2):
    return egnn.EgnnConfig(
        n_layers=layers,
        hidden_dim=hidden,
        in_dim=in_dim,
        head="node_class" if task_kind == "apr" else "node_regress",
        l_max=l_max if task_kind == "apr" else 0,
        seed=1,
    )


def test_train_deterministic_to_bitwise():
    graphs = small_graphs()
    task = trainer.make_task("apr", graphs, 32)
    r1 = trainer.train(task, model_cfg("apr", 21), quick_cfg())
    r2 = trainer.train(task, model_cfg("apr", 21), quick_cfg())
    assert r1.train_losses == r2.train_losses
    assert r1.metric_value == r2.metric_value


def test_train_loss_decreases_on_learnable_task():
    graphs = with_positional(small_graphs())
    task = trainer.make_task("apr", graphs, 32)
    rep = trainer.train(task, model_cfg("apr", graphs[0].feat_dim), quick_cfg(epochs=2))
    assert rep.train_losses[1] < rep.train_losses[0]


def test_train_report_fields():
    graphs = small_graphs()
    task = trainer.make_task("rpe", graphs)
    rep = trainer.train(task, model_cfg("rpe", 21), quick_cfg())
    assert rep.task == "rpe"
    assert rep.metric_name == "rmse"
    assert len(rep.train_losses) == 3
    assert rep.split_sizes == {"train": 4, "val": 2, "test": 2}
    assert rep.wall_clock_seconds > 0
    doc = rep.to_dict()
    assert doc["config"]["train"]["seed"] == 5


def test_train_head_task_mismatch():
    graphs = small_graphs()
    task = trainer.make_task("apr", graphs, 32)
    with pytest.raises(ConfigError):
        trainer.train(task, model_cfg("rpe", 21), quick_cfg())


def test_train_rejects_small_l_max():
    graphs = small_graphs(length=24)
    task = trainer.make_task("apr", graphs, 32)
    bad = egnn.EgnnConfig(1, 8, 21, "node_class", l_max=10, seed=0)
    with pytest.raises(ConfigError):
        trainer.train(task, bad, quick_cfg())


def test_explicit_split_honored():
    graphs = small_graphs(count=6)
    task = trainer.make_task("rpe", graphs)
    rep = trainer.train(
        task,
        model_cfg("rpe", 21),
        quick_cfg(),
        explicit_split=([0, 1, 2], [3], [4, 5]),
    )
    assert rep.split_sizes == {"train": 3, "val": 1, "test": 2}
    with pytest.raises(ConfigError):
        trainer.train(
            task, model_cfg("rpe", 21), quick_cfg(), explicit_split=([0], [1], [2])
        )


def test_label_shuffled_control_near_chance():
    # shuffling APR labels destroys the signal: accuracy within [0, 3/len]
    length = 40
    graphs = small_graphs(count=10, length=length, seed=9)
    task = trainer.make_task("apr", graphs, 64)
    rng = np.random.default_rng(0)
    task.labels = [rng.permutation(lab) for lab in task.labels]
    rep = trainer.train(
        task,
        model_cfg("apr", 21, l_max=64),
        quick_cfg(epochs=3, split=(0.8, 0.1, 0.1)),
    )
    assert 0.0 <= rep.metric_value <= 100.0 * 3.0 / length


def test_positional_features_make_rpe_solvable():
    graphs = with_positional(small_graphs(count=10, length=20, seed=21))
    task = trainer.make_task("rpe", graphs)
    rep = trainer.train(
        task,
        model_cfg("rpe", graphs[0].feat_dim, hidden=32),
        quick_cfg(epochs=40, batch_size=1, split=(0.8, 0.1, 0.1)),
    )
    assert rep.metric_value <= 2.0
