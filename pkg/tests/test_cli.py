import json

import numpy as np
import pytest

from plmgraph import cli, embedio, graphbuild, metrics
from plmgraph.graphbuild import ResidueGraph

from conftest import atom_line, pdb_text


@pytest.fixture
def pdb_file(tmp_path):
    rng = np.random.default_rng(0)
    coords = rng.uniform(-15, 15, size=(12, 3))
    lines = [
        atom_line(i + 1, "CA", "ALA", "A", i + 1, *coords[i]) for i in range(12)
    ]
    path = tmp_path / "in.pdb"
    path.write_text(pdb_text(lines))
    return path


def run(argv):
    return cli.main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text())


# --- graph ---

def test_graph_knn(tmp_path, pdb_file):
    out = tmp_path / "g.json"
    assert run(["graph", pdb_file, "--mode", "knn", "--k", "3", "-o", out]) == 0
    g = ResidueGraph.from_json(out.read_text())
    assert g.n == 12
    deg = np.bincount(g.edges[:, 0], minlength=12)
    assert (deg == 3).all()
    manifest = read_json(tmp_path / "g.json.manifest.json")
    assert manifest["command"] == "graph"
    assert str(pdb_file) in manifest["inputs"]
    assert len(manifest["inputs"][str(pdb_file)]) == 64  # sha256 hex


def test_graph_rball_symmetric(tmp_path, pdb_file):
    out = tmp_path / "g.json"
    assert run(["graph", pdb_file, "--mode", "rball", "--cutoff", "12", "-o", out]) == 0
    g = ResidueGraph.from_json(out.read_text())
    edges = {(int(i), int(j)) for i, j in g.edges}
    assert edges == {(j, i) for i, j in edges}


def test_graph_missing_file_exit2(tmp_path):
    assert run(["graph", tmp_path / "missing.pdb", "-o", tmp_path / "o.json"]) == 2


def test_graph_construction_error_exit3(tmp_path):
    single = tmp_path / "one.pdb"
    single.write_text(pdb_text([atom_line(1, "CA", "ALA", "A", 1, 0, 0, 0)]))
    assert run(["graph", single, "-o", tmp_path / "o.json"]) == 3


def test_graph_batch_jobs(tmp_path, pdb_file):
    out_dir = tmp_path / "graphs"
    second = tmp_path / "b.pdb"
    second.write_text(pdb_file.read_text())
    assert run(["graph", pdb_file, second, "--out-dir", out_dir, "--jobs", "2"]) == 0
    assert (out_dir / "in.graph.json").exists()
    assert (out_dir / "b.graph.json").exists()


def test_graph_deterministic_output(tmp_path, pdb_file):
    o1, o2 = tmp_path / "a.json", tmp_path / "b.json"
    run(["graph", pdb_file, "--k", "4", "-o", o1])
    run(["graph", pdb_file, "--k", "4", "-o", o2])
    assert o1.read_bytes() == o2.read_bytes()


# --- fuse ---

def write_graph(tmp_path, n=8):
    rng = np.random.default_rng(1)
    lines = [
        atom_line(i + 1, "CA", "ALA", "A", i + 1, *rng.uniform(-10, 10, 3))
        for i in range(n)
    ]
    pdb = tmp_path / "f.pdb"
    pdb.write_text(pdb_text(lines))
    gpath = tmp_path / "f.graph.json"
    assert run(["graph", pdb, "--k", "3", "-o", gpath]) == 0
    return gpath


def write_pre_file(tmp_path, n, d, name="e.pre"):
    rng = np.random.default_rng(2)
    e = embedio.EmbeddingMatrix(rng.normal(size=(n, d)), "testmodel")
    path = tmp_path / name
    path.write_text(embedio.write_pre(e))
    return path


def test_fuse_concat(tmp_path):
    gpath = write_graph(tmp_path, 8)
    ppath = write_pre_file(tmp_path, 8, 1280)
    out = tmp_path / "fused.json"
    assert run(["fuse", gpath, ppath, "--mode", "concat", "-o", out]) == 0
    g = ResidueGraph.from_json(out.read_text())
    assert g.feat_dim == 1301
    manifest = read_json(tmp_path / "fused.json.manifest.json")
    assert manifest["config"]["fused_dim"] == 1301


def test_fuse_replace(tmp_path):
    gpath = write_graph(tmp_path, 8)
    ppath = write_pre_file(tmp_path, 8, 1280)
    out = tmp_path / "fused.json"
    assert run(["fuse", gpath, ppath, "--mode", "replace", "-o", out]) == 0
    assert ResidueGraph.from_json(out.read_text()).feat_dim == 1280


def test_fuse_row_mismatch_exit3(tmp_path, capsys):
    gpath = write_graph(tmp_path, 8)
    ppath = write_pre_file(tmp_path, 9, 64)
    assert run(["fuse", gpath, ppath, "-o", tmp_path / "x.json"]) == 3
    err = capsys.readouterr().err
    assert "9" in err and "8" in err  # diagnostic names both counts


def test_fuse_align_path(tmp_path):
    gpath = write_graph(tmp_path, 8)  # fragmentary: 8 x ALA
    fasta = tmp_path / "full.fasta"
    fasta.write_text(">full\nGAAAAAAAAG\n")  # 10 residues; 8 A's inside
    ppath = write_pre_file(tmp_path, 10, 16)
    out = tmp_path / "fused.json"
    assert run([
        "fuse", gpath, ppath, "--mode", "replace", "--align", fasta, "-o", out,
    ]) == 0
    g = ResidueGraph.from_json(out.read_text())
    assert g.feat_dim == 16 and g.n == 8
    # the kept rows are the aligned interior of the FASTA-side embedding
    src = embedio.read_pre(ppath.read_text())
    np.testing.assert_array_equal(g.node_feats, src.data[1:9])


# --- toytask ---

def toytask_args(tmp_path, out, **over):
    base = {
        "task": "apr",
        "features": "positional",
        "graph-mode": "knn",
        "synthetic": "8x12",
        "epochs": 2,
        "hidden": 16,
        "layers": 1,
        "l-max": 16,
        "seed": 3,
    }
    base.update(over)
    argv = ["toytask"]
    for key, value in base.items():
        if value is not None:
            argv += [f"--{key}", str(value)]
    return argv + ["-o", str(out)]


def test_toytask_report(tmp_path):
    out = tmp_path / "report.json"
    assert run(toytask_args(tmp_path, out)) == 0
    doc = read_json(out)
    assert doc["task"] == "apr"
    assert doc["metric_name"] == "accuracy_pct"
    assert 0.0 <= doc["metric_value"] <= 100.0
    assert len(doc["train_losses"]) == 2
    assert doc["features"] == "positional"
    assert (tmp_path / "report.json.manifest.json").exists()


def test_toytask_byte_identical_modulo_wall_clock(tmp_path):
    o1, o2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run(toytask_args(tmp_path, o1)) == 0
    assert run(toytask_args(tmp_path, o2)) == 0
    d1, d2 = read_json(o1), read_json(o2)
    assert d1["wall_clock_seconds"] != 0
    d1["wall_clock_seconds"] = d2["wall_clock_seconds"] = 0.0
    assert json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True)


def test_toytask_rpe_pre_features(tmp_path):
    e = embedio.synth_positional(12, 12, "onehot_index")
    ppath = tmp_path / "pos.pre"
    ppath.write_text(embedio.write_pre(e))
    out = tmp_path / "rpe.json"
    argv = toytask_args(tmp_path, out, task="rpe", features=f"pre:{ppath}")
    assert run(argv) == 0
    assert read_json(out)["metric_name"] == "rmse"


def test_toytask_graphs_manifest_with_split_tags(tmp_path):
    paths = []
    rng = np.random.default_rng(5)
    for i in range(4):
        lines = [
            atom_line(j + 1, "CA", "GLY", "A", j + 1, *rng.uniform(-8, 8, 3))
            for j in range(10)
        ]
        pdb = tmp_path / f"m{i}.pdb"
        pdb.write_text(pdb_text(lines))
        gpath = tmp_path / f"m{i}.graph.json"
        assert run(["graph", pdb, "--k", "3", "-o", gpath]) == 0
        paths.append(gpath.name)
    manifest = tmp_path / "dataset.json"
    manifest.write_text(json.dumps([
        {"path": paths[0], "split": "train"},
        {"path": paths[1], "split": "train"},
        {"path": paths[2], "split": "val"},
        {"path": paths[3], "split": "test"},
    ]))
    out = tmp_path / "r.json"
    argv = [
        "toytask", "--task", "rpe", "--features", "onehot",
        "--graphs", manifest, "--epochs", "1", "--hidden", "8",
        "--layers", "1", "-o", out,
    ]
    assert run(argv) == 0
    assert read_json(out)["split_sizes"] == {"train": 2, "val": 1, "test": 1}


def test_toytask_config_file_merge(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epochs": 1, "hidden": 8}))
    out = tmp_path / "r.json"
    argv = toytask_args(tmp_path, out, epochs=2, hidden=None) + ["--config", str(cfg)]
    assert run(argv) == 0
    doc = read_json(out)
    assert doc["config"]["train"]["epochs"] == 2       # explicit flag wins
    assert doc["config"]["model"]["hidden_dim"] == 8   # config fills the rest


# --- metrics ---

def test_metrics_mqa(tmp_path):
    scores = tmp_path / "scores.json"
    scores.write_text(json.dumps([
        {"target_id": "t1", "items": [[0.1, 0.1], [0.5, 0.5], [0.9, 0.9]]},
    ]))
    out = tmp_path / "mqa.json"
    assert run(["metrics", "--suite", "mqa", "--scores", scores, "-o", out]) == 0
    doc = read_json(out)
    assert doc["suite"] == "mqa"
    assert doc["metrics"]["first_rank_loss"] == 0.0
    assert doc["metrics"]["spearman_global"] == pytest.approx(1.0)


def test_metrics_docking_identity(tmp_path):
    rng = np.random.default_rng(6)
    receptor = rng.normal(size=(10, 3))
    ligand = np.vstack([receptor[:3] + 1.0, rng.normal(size=(4, 3)) + 50.0])
    for name, pts in (("r.pts", receptor), ("l.pts", ligand), ("p.pts", ligand)):
        (tmp_path / name).write_text(metrics.write_pts(pts))
    out = tmp_path / "dock.json"
    assert run([
        "metrics", "--suite", "docking",
        "--receptor", tmp_path / "r.pts",
        "--ligand", tmp_path / "l.pts",
        "--pred-ligand", tmp_path / "p.pts",
        "-o", out,
    ]) == 0
    doc = read_json(out)
    assert doc["metrics"]["complex_rmsd_median"] == 0.0
    assert doc["metrics"]["ligand_rmsd_median"] == 0.0
    assert doc["metrics"]["interface_rmsd_median"] == 0.0


def test_metrics_ppi_example(tmp_path):
    scores = tmp_path / "ppi.json"
    scores.write_text(json.dumps({
        "scores": [0.1, 0.4, 0.35, 0.8], "labels": [0, 0, 1, 1],
    }))
    out = tmp_path / "ppi_report.json"
    assert run(["metrics", "--suite", "ppi", "--scores", scores, "-o", out]) == 0
    assert read_json(out)["metrics"]["auroc"] == pytest.approx(0.75)
    manifest = read_json(tmp_path / "ppi_report.json.manifest.json")
    assert manifest["command"] == "metrics"
    assert str(scores) in manifest["inputs"]


def test_metrics_lba_columns(tmp_path):
    pairs = tmp_path / "pk.txt"
    pairs.write_text("5.0 5.5\n6.0 6.5\n7.0 7.5\n")
    out = tmp_path / "lba.json"
    assert run(["metrics", "--suite", "lba", "--pairs", pairs, "-o", out]) == 0
    doc = read_json(out)
    assert doc["metrics"]["rmsd"] == pytest.approx(0.5)
    assert doc["metrics"]["pearson"] == pytest.approx(1.0)


def test_metrics_bad_input_exit2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["metrics", "--suite", "mqa", "--scores", bad, "-o", tmp_path / "o"]) == 2


def test_metrics_degenerate_exit3(tmp_path):
    scores = tmp_path / "scores.json"
    scores.write_text(json.dumps([
        {"target_id": "t", "items": [[1.0, 2.0], [1.0, 3.0]]},
    ]))
    assert run([
        "metrics", "--suite", "mqa", "--scores", scores, "-o", tmp_path / "o",
    ]) == 3


# --- misc ---

def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "plmgraph" in capsys.readouterr().out


def test_manifest_written_before_output(tmp_path, pdb_file, monkeypatch):
    # force the artifact write to fail; the manifest must already be there
    out = tmp_path / "g.json"
    real_write_text = type(out).write_text

    def boom(self, *a, **k):
        if self.name == "g.json":
            raise OSError("disk full")
        return real_write_text(self, *a, **k)

    monkeypatch.setattr(type(out), "write_text", boom)
    with pytest.raises(OSError):
        run(["graph", pdb_file, "-o", out])
    assert (tmp_path / "g.json.manifest.json").exists()
