"""Command-line pipelines: graph construction, embedding fusion, the toy
position-recovery experiments, and the metric suites.

Every command writes a run manifest (<output>.manifest.json) before the
output artifact itself; the manifest records the resolved configuration,
sha256 digests of all inputs, and the seed, so outputs are attributable
and reruns comparable. Exit codes: 0 success, 2 input/parse failure,
3 domain/config failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, egnn, embedio, graphbuild, metrics, seqalign, structio, trainer
from .errors import PlmGraphError, RowCountMismatch

EXIT_INPUT = 2
EXIT_DOMAIN = 3


class _InputError(Exception):
    """Wraps any failure while reading/parsing inputs (exit code 2)."""


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc


def _load(fn, path: str):
    """Run a parser over a file's content; parser errors become input errors."""
    text = _read_text(path)
    try:
        return fn(text)
    except (PlmGraphError, json.JSONDecodeError, ValueError) as exc:
        raise _InputError(f"{path}: {exc}") from exc


def _digest(path: str) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc


def _write_manifest(out_path: str, command: str, config: dict, inputs: list[str], seed):
    manifest = {
        "command": command,
        "config": config,
        "inputs": {p: _digest(p) for p in inputs},
        "outputs": [str(out_path)],
        "seed": seed,
        "version": __version__,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, sort_keys=True) + "\n")


def _resolved_config(args: argparse.Namespace, skip=("func", "config")) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def _merge_config_file(args: argparse.Namespace, argv: list[str]):
    """Fill flags from --config JSON; flags given on the command line win.

    Config keys use the flag dest names (k, cutoff, epochs, ...).
    """
    if not getattr(args, "config", None):
        return
    doc = _load(json.loads, args.config)
    if not isinstance(doc, dict):
        raise _InputError(f"{args.config}: config must be a JSON object")
    for key, value in doc.items():
        if not hasattr(args, key) or key in ("func", "command", "config"):
            raise _InputError(f"{args.config}: unknown config key {key!r}")
        flag = "--" + key.replace("_", "-")
        given = any(tok == flag or tok.startswith(flag + "=") for tok in argv)
        if key == "out":
            given = given or any(tok == "-o" for tok in argv)
        if not given:
            setattr(args, key, value)


# --- graph ---

def _build_one_graph(path: str, args) -> graphbuild.ResidueGraph:
    chain_filter = set(args.chains.split(",")) if args.chains else None
    structure = _load(lambda t: structio.parse_pdb(t, chain_filter), path)
    if args.mode == "knn":
        return graphbuild.build_knn(structure, args.k)
    if args.mode == "rball":
        return graphbuild.build_rball(structure, args.cutoff)
    return graphbuild.build_fc(structure)


def cmd_graph(parser, args) -> int:
    if args.out is None and args.out_dir is None:
        parser.error("graph: need -o for a single input or --out-dir for a batch")
    if args.out is not None and len(args.pdb) != 1:
        parser.error("graph: -o works with exactly one input; use --out-dir")
    outs = (
        [args.out]
        if args.out is not None
        else [str(Path(args.out_dir) / (Path(p).stem + ".graph.json")) for p in args.pdb]
    )
    config = _resolved_config(args)

    def run(pair):
        path, out = pair
        g = _build_one_graph(path, args)
        _write_manifest(out, "graph", config, [path], args.seed)
        Path(out).write_text(g.to_json() + "\n")
        return out

    jobs = max(1, args.jobs)
    if jobs == 1 or len(args.pdb) == 1:
        for pair in zip(args.pdb, outs):
            run(pair)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(run, zip(args.pdb, outs)))  # input order preserved
    return 0


# --- fuse ---

def _graph_sequence(g: graphbuild.ResidueGraph) -> structio.Sequence:
    if g.feat_dim != len(structio.AA_ALPHABET_X):
        raise PlmGraphError(
            "cannot recover the fragmentary sequence: graph features are "
            f"{g.feat_dim}-dim, expected the 21-dim one-hot of an unfused graph"
        )
    letters = "".join(
        structio.AA_ALPHABET_X[i] for i in np.argmax(g.node_feats, axis=1)
    )
    return structio.Sequence("structure", letters)


def cmd_fuse(parser, args) -> int:
    g = _load(graphbuild.ResidueGraph.from_json, args.graph)
    emb = _load(embedio.read_pre, args.pre)
    inputs = [args.graph, args.pre]

    if args.align:
        fasta = _load(structio.parse_fasta, args.align)
        inputs.append(args.align)
        al = seqalign.align_global(fasta[0], _graph_sequence(g))
        emb = seqalign.restrict_embedding(emb, al)

    try:
        fused = graphbuild.attach_features(g, emb.data, args.mode)
    except RowCountMismatch:
        raise RowCountMismatch(
            f"embedding rows ({emb.n_rows}) != graph residues ({g.n}); "
            "use --align with the FASTA the embedding was computed from"
        ) from None

    config = _resolved_config(args)
    config["fused_dim"] = fused.feat_dim
    config["embedding_source"] = emb.source
    _write_manifest(args.out, "fuse", config, inputs, args.seed)
    Path(args.out).write_text(fused.to_json() + "\n")
    return 0


# --- toytask ---

def _load_graph_manifest(path: str):
    doc = _load(json.loads, path)
    if not isinstance(doc, list):
        raise _InputError(f"{path}: dataset manifest must be a JSON list")
    graphs, splits, inputs = [], [], []
    base = Path(path).parent
    for entry in doc:
        gpath = entry["path"] if isinstance(entry, dict) else entry
        resolved = str((base / gpath) if not Path(gpath).is_absolute() else gpath)
        graphs.append(_load(graphbuild.ResidueGraph.from_json, resolved))
        splits.append(entry.get("split") if isinstance(entry, dict) else None)
        inputs.append(resolved)
    return graphs, splits, inputs


def _toytask_graphs(args) -> tuple[list[graphbuild.ResidueGraph], list, list[str]]:
    if args.synthetic:
        try:
            count, length = (int(v) for v in args.synthetic.lower().split("x"))
        except ValueError:
            raise _InputError(f"--synthetic wants COUNTxLENGTH, got {args.synthetic!r}")
        structures = trainer.synth_dataset(count, length, args.seed)
        build = {
            "knn": lambda s: graphbuild.build_knn(s, args.k),
            "rball": lambda s: graphbuild.build_rball(s, args.cutoff),
            "fc": graphbuild.build_fc,
        }[args.graph_mode]
        return [build(s) for s in structures], [None] * count, []
    if args.graphs:
        return _load_graph_manifest(args.graphs)
    raise _InputError("toytask: need --synthetic COUNTxLENGTH or --graphs MANIFEST")


def _apply_features(graphs, spec_text: str):
    if spec_text == "onehot":
        return graphs
    if spec_text == "positional":
        dim = max(g.n for g in graphs)
        return [
            graphbuild.attach_features(
                g, embedio.synth_positional(g.n, dim, "onehot_index").data, "replace"
            )
            for g in graphs
        ]
    if spec_text.startswith("pre:"):
        emb = _load(embedio.read_pre, spec_text[4:])
        return [graphbuild.attach_features(g, emb.data, "replace") for g in graphs]
    raise _InputError(f"unknown --features {spec_text!r}")


def cmd_toytask(parser, args) -> int:
    graphs, tags, extra_inputs = _toytask_graphs(args)
    kept = [(g, t) for g, t in zip(graphs, tags) if g.n <= args.l_max]
    if len(kept) < len(graphs):
        print(
            f"warning: skipped {len(graphs) - len(kept)} chains longer than "
            f"--l-max {args.l_max}",
            file=sys.stderr,
        )
    if not kept:
        raise PlmGraphError(f"no chains of length <= --l-max {args.l_max} left")
    graphs = [g for g, _ in kept]
    tags = [t for _, t in kept]
    graphs = _apply_features(graphs, args.features)

    task = trainer.make_task(args.task, graphs, args.l_max)
    in_dim = graphs[0].feat_dim
    head = "node_class" if args.task == "apr" else "node_regress"
    model_cfg = egnn.EgnnConfig(
        n_layers=args.layers,
        hidden_dim=args.hidden,
        in_dim=in_dim,
        head=head,
        l_max=args.l_max if head == "node_class" else 0,
        update_coords=False,
        seed=args.seed,
    )
    split = tuple(float(v) for v in str(args.split).split(","))
    if len(split) != 3:
        raise _InputError(f"--split wants three fractions, got {args.split!r}")
    train_cfg = trainer.TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        split=split,
    )
    explicit = None
    if all(t in ("train", "val", "test") for t in tags) and tags:
        explicit = tuple(
            [i for i, t in enumerate(tags) if t == name]
            for name in ("train", "val", "test")
        )
    report = trainer.train(task, model_cfg, train_cfg, explicit_split=explicit)
    doc = report.to_dict()
    doc["features"] = args.features
    doc["graph_mode"] = args.graph_mode
    doc["synthetic"] = args.synthetic
    if any(t is not None for t in tags):
        doc["split_tags"] = tags

    if args.features.startswith("pre:"):
        extra_inputs = extra_inputs + [args.features[4:]]
    _write_manifest(args.out, "toytask", _resolved_config(args), extra_inputs, args.seed)
    Path(args.out).write_text(json.dumps(doc, sort_keys=True) + "\n")
    return 0


# --- metrics ---

def _load_scored_sets(path: str) -> list[metrics.ScoredSet]:
    doc = _load(json.loads, path)
    if isinstance(doc, dict):
        doc = doc.get("targets", [])
    sets = []
    for entry in doc:
        items = entry.get("items")
        if items is not None:
            pred = [row[0] for row in items]
            true = [row[1] for row in items]
        else:
            pred, true = entry["predicted"], entry["true"]
        sets.append(metrics.ScoredSet(str(entry.get("target_id", len(sets))), pred, true))
    if not sets:
        raise _InputError(f"{path}: no targets found")
    return sets


def _load_columns(path: str, names: tuple[str, str]) -> tuple[list, list]:
    text = _read_text(path)
    if path.endswith(".json"):
        doc = _load(json.loads, path)
        return list(doc[names[0]]), list(doc[names[1]])
    first, second = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise _InputError(f"{path}:{lineno}: expected two columns")
        try:
            first.append(float(parts[0]))
            second.append(float(parts[1]))
        except ValueError:
            raise _InputError(f"{path}:{lineno}: non-numeric value") from None
    return first, second


def cmd_metrics(parser, args) -> int:
    inputs: list[str] = []
    if args.suite == "mqa":
        if not args.scores:
            parser.error("metrics --suite mqa needs --scores")
        report = metrics.suite_mqa(_load_scored_sets(args.scores))
        inputs = [args.scores]
    elif args.suite == "docking":
        if args.complexes:
            doc = _load(json.loads, args.complexes)
            inputs = [args.complexes]
            base = Path(args.complexes).parent
            entries = []
            for k, entry in enumerate(doc):
                paths = [entry["receptor"], entry["ligand"], entry["pred_ligand"]]
                paths = [
                    str(base / p) if not Path(p).is_absolute() else p for p in paths
                ]
                inputs.extend(paths)
                entries.append((str(entry.get("target_id", k)), paths))

            def load_triple(entry):
                target_id, paths = entry
                rec, lig, pred = (_load(metrics.read_pts, p) for p in paths)
                return (
                    target_id,
                    metrics.PointSet("receptor", rec),
                    metrics.PointSet("ligand", lig),
                    metrics.PointSet("ligand", pred),
                )

            jobs = max(1, args.jobs)
            if jobs == 1 or len(entries) < 2:
                triples = [load_triple(e) for e in entries]
            else:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    triples = list(pool.map(load_triple, entries))  # input order
        else:
            if not (args.receptor and args.ligand and args.pred_ligand):
                parser.error(
                    "metrics --suite docking needs --receptor/--ligand/--pred-ligand "
                    "or --complexes"
                )
            inputs = [args.receptor, args.ligand, args.pred_ligand]
            triples = [
                (
                    "complex0",
                    metrics.PointSet("receptor", _load(metrics.read_pts, args.receptor)),
                    metrics.PointSet("ligand", _load(metrics.read_pts, args.ligand)),
                    metrics.PointSet("ligand", _load(metrics.read_pts, args.pred_ligand)),
                )
            ]
        report = metrics.suite_docking(triples, args.cutoff)
    elif args.suite == "ppi":
        if not args.scores:
            parser.error("metrics --suite ppi needs --scores")
        scores, labels = _load_columns(args.scores, ("scores", "labels"))
        report = metrics.suite_ppi(scores, [int(v) for v in labels])
        inputs = [args.scores]
    else:  # lba
        if not args.pairs:
            parser.error("metrics --suite lba needs --pairs")
        pred, true = _load_columns(args.pairs, ("predicted", "true"))
        report = metrics.suite_lba(pred, true)
        inputs = [args.pairs]

    _write_manifest(args.out, "metrics", _resolved_config(args), inputs, args.seed)
    Path(args.out).write_text(report.to_json() + "\n")
    return 0


# --- wiring ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plmgraph",
        description="Residue graphs, embedding fusion, toy experiments, metrics.",
    )
    parser.add_argument("--version", action="version", version=f"plmgraph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="build a residue graph from a PDB file")
    p.add_argument("pdb", nargs="+", help="PDB file(s)")
    p.add_argument("--mode", choices=graphbuild.MODES, default="knn")
    p.add_argument("--k", type=int, default=10, help="KNN neighbor count")
    p.add_argument("--cutoff", type=float, default=8.0, help="r-ball cutoff (A)")
    p.add_argument("--chains", default=None, help="comma-separated chain filter")
    p.add_argument("-o", "--out", default=None, help="output graph JSON")
    p.add_argument("--out-dir", default=None, help="output directory (batch mode)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers in batch mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="JSON config merged under flags")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("fuse", help="fuse a PRE embedding into a graph's features")
    p.add_argument("graph", help="graph JSON from the graph command")
    p.add_argument("pre", help="PRE embedding file")
    p.add_argument("--mode", choices=("replace", "concat", "sum"), default="replace")
    p.add_argument(
        "--align",
        default=None,
        metavar="FASTA",
        help="align this full sequence against the structure and keep only "
        "matched embedding rows (default: embedding already fragmentary)",
    )
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("toytask", help="run a position-recovery toy experiment")
    p.add_argument("--task", choices=("apr", "rpe"), required=True)
    p.add_argument(
        "--features",
        default="onehot",
        help="onehot | positional | pre:<path>",
    )
    p.add_argument("--graph-mode", choices=graphbuild.MODES, default="knn")
    p.add_argument("--synthetic", default=None, metavar="COUNTxLENGTH")
    p.add_argument("--graphs", default=None, help="dataset manifest JSON")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--cutoff", type=float, default=8.0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--l-max", type=int, default=trainer.DEFAULT_L_MAX)
    p.add_argument("--split", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_toytask)

    p = sub.add_parser("metrics", help="evaluate a benchmark metric suite")
    p.add_argument("--suite", choices=("mqa", "docking", "ppi", "lba"), required=True)
    p.add_argument("--scores", default=None, help="ScoredSet JSON (mqa) or score/label file (ppi)")
    p.add_argument("--pairs", default=None, help="predicted/true pK file (lba)")
    p.add_argument("--receptor", default=None, help="true receptor PTS")
    p.add_argument("--ligand", default=None, help="true ligand PTS")
    p.add_argument("--pred-ligand", default=None, help="predicted ligand PTS")
    p.add_argument("--complexes", default=None, help="JSON manifest of docking triples")
    p.add_argument("--cutoff", type=float, default=8.0, help="interface cutoff (A)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers in batch mode")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(argv)
    try:
        _merge_config_file(args, argv)
        return args.func(parser, args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PlmGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
