"""Toy position-recovery tasks, synthetic chains, and the training loop.

Two node-level tasks probe whether a geometric network can see sequence
positions: APR classifies each residue's index (0..N-1 internally,
reported 1-based), RPE regresses each residue's distance to the nearer
chain terminus. Chains are synthetic self-avoiding walks with exact
3.8 A consecutive CA spacing, so no external data is needed.

Training is plain Adam on cross-entropy (APR, with per-graph class
masking beyond N) or mean squared error (RPE), single-threaded and
bitwise deterministic for a given seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import egnn
from .errors import ChainTooLong, ConfigError, GenerationFailed
from .graphbuild import ResidueGraph
from .structio import AA_ALPHABET, Chain, Residue, Structure

DEFAULT_L_MAX = 1024

CA_SPACING = 3.8     # consecutive CA distance, Angstroms
MIN_CLEARANCE = 3.0  # minimum non-consecutive pair distance


@dataclass
class ToyTask:
    kind: str                       # "apr" | "rpe"
    graphs: list[ResidueGraph]
    labels: list[np.ndarray]        # per-graph, int (apr) or float (rpe)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 1
    seed: int = 0
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {self.split}")


@dataclass
class RunReport:
    task: str
    train_losses: list[float]
    metric_name: str
    metric_value: float
    config: dict
    split_sizes: dict
    wall_clock_seconds: float

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "train_losses": self.train_losses,
            "metric_name": self.metric_name,
            "metric_value": self.metric_value,
            "config": self.config,
            "split_sizes": self.split_sizes,
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def label_apr(g: ResidueGraph, l_max: int = DEFAULT_L_MAX) -> np.ndarray:
    """Node i gets class i (0-based); chains longer than the class budget
    are rejected."""
    if g.n > l_max:
        raise ChainTooLong(f"chain of {g.n} residues exceeds class budget {l_max}")
    return np.arange(g.n, dtype=np.int64)


def label_rpe(g: ResidueGraph) -> np.ndarray:
    """Node i gets min(i, N-1-i): its distance to the nearer terminus."""
    idx = np.arange(g.n, dtype=np.float64)
    return np.minimum(idx, g.n - 1 - idx)


def synth_chain(n: int, seed: int, max_restarts: int = 50) -> Structure:
    """A self-avoiding random-walk CA trace of n residues.

    Consecutive CA spacing is exactly 3.8 A; every non-consecutive pair
    is kept >= 3.0 A apart (checked by rejection with bounded retries).
    Residue types are uniform over the 20 standard amino acids.
    """
    if n < 2:
        raise ConfigError(f"need n >= 2 residues, got {n}")
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        pts = np.zeros((n, 3), dtype=np.float64)
        count = 1
        stuck = False
        while count < n:
            for _ in range(100):
                v = rng.normal(size=3)
                v /= np.linalg.norm(v)
                cand = pts[count - 1] + CA_SPACING * v
                if count < 2 or np.min(
                    np.linalg.norm(pts[: count - 1] - cand, axis=1)
                ) >= MIN_CLEARANCE:
                    pts[count] = cand
                    count += 1
                    break
            else:
                stuck = True
                break
        if stuck:
            continue
        letters = [AA_ALPHABET[i] for i in rng.integers(0, 20, size=n)]
        residues = tuple(
            Residue(i + 1, "", letters[i], tuple(pts[i])) for i in range(n)
        )
        return Structure(f"synth{seed}", (Chain("A", residues),))
    raise GenerationFailed(f"no self-avoiding walk of length {n} in {max_restarts} restarts")


def synth_dataset(count: int, length: int, seed: int) -> list[Structure]:
    """`count` independent chains with per-chain seeds derived from `seed`."""
    child = np.random.SeedSequence(seed).generate_state(count)
    return [synth_chain(length, int(s)) for s in child]


def split_indices(
    n: int, fractions: tuple[float, float, float], seed: int
) -> tuple[list[int], list[int], list[int]]:
    """Disjoint, covering train/val/test index sets, seed-shuffled."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    train = sorted(int(i) for i in order[:n_train])
    val = sorted(int(i) for i in order[n_train:n_train + n_val])
    test = sorted(int(i) for i in order[n_train + n_val:])
    return train, val, test


def make_task(kind: str, graphs: list[ResidueGraph], l_max: int = DEFAULT_L_MAX) -> ToyTask:
    if kind == "apr":
        return ToyTask(kind, graphs, [label_apr(g, l_max) for g in graphs])
    if kind == "rpe":
        return ToyTask(kind, graphs, [label_rpe(g) for g in graphs])
    raise ConfigError(f"unknown task kind {kind!r}")


def _apr_loss_grad(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Masked cross-entropy: classes beyond the graph's N are excluded
    from the softmax (equivalent to -inf logits)."""
    n = y.shape[0]
    z = logits[:, :n]
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    sez = ez.sum(axis=1, keepdims=True)
    log_probs = (z - zmax) - np.log(sez)
    loss = -float(log_probs[np.arange(n), y].mean())
    grad = np.zeros_like(logits)
    grad[:, :n] = ez / sez
    grad[np.arange(n), y] -= 1.0
    grad /= n
    return loss, grad


def _rpe_loss_grad(pred: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    resid = pred - y
    return float(np.mean(resid**2)), 2.0 * resid / y.shape[0]


class Adam:
    """Textbook Adam with bias correction; state keyed like the params."""

    def __init__(self, params: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for name in params:
            g = grads[name]
            self.m[name] = self.b1 * self.m[name] + (1.0 - self.b1) * g
            self.v[name] = self.b2 * self.v[name] + (1.0 - self.b2) * g * g
            params[name] = params[name] - self.lr * (self.m[name] / c1) / (
                np.sqrt(self.v[name] / c2) + self.eps
            )


def _evaluate(model: egnn.EgnnModel, task: ToyTask, idx: list[int]) -> tuple[str, float]:
    if task.kind == "apr":
        correct = total = 0
        for i in idx:
            out, _ = egnn.forward(model, task.graphs[i])
            n = task.graphs[i].n
            pred = np.argmax(out.head[:, :n], axis=1)
            correct += int((pred == task.labels[i]).sum())
            total += n
        return "accuracy_pct", 100.0 * correct / total
    sq = []
    for i in idx:
        out, _ = egnn.forward(model, task.graphs[i])
        sq.append((out.head - task.labels[i]) ** 2)
    return "rmse", float(np.sqrt(np.concatenate(sq).mean()))


def train(
    task: ToyTask,
    model_cfg: egnn.EgnnConfig,
    cfg: TrainConfig,
    explicit_split: tuple[list[int], list[int], list[int]] | None = None,
) -> RunReport:
    """Optimize the network on the task's train split and report the
    held-out test metric. Deterministic given the two seeds.

    explicit_split overrides the seeded split with caller-provided
    train/val/test index lists (e.g. from a dataset manifest's tags).
    """
    if not task.graphs:
        raise ConfigError("task has no graphs")
    if any(g.feat_dim != model_cfg.in_dim for g in task.graphs):
        raise ConfigError("graph feature dims do not all match model in_dim")
    if task.kind == "apr":
        if model_cfg.head != "node_class":
            raise ConfigError("APR needs a node_class head")
        if model_cfg.l_max < max(g.n for g in task.graphs):
            raise ConfigError("l_max smaller than the longest chain")
    elif model_cfg.head != "node_regress":
        raise ConfigError("RPE needs a node_regress head")

    t0 = time.perf_counter()
    if explicit_split is not None:
        train_idx, val_idx, test_idx = (sorted(s) for s in explicit_split)
        all_idx = sorted([*train_idx, *val_idx, *test_idx])
        if all_idx != list(range(len(task.graphs))):
            raise ConfigError("explicit split must cover all graphs exactly once")
    else:
        train_idx, val_idx, test_idx = split_indices(len(task.graphs), cfg.split, cfg.seed)
    if not train_idx or not test_idx:
        raise ConfigError("split leaves train or test empty")

    model = egnn.init_model(model_cfg)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    shuffle_rng = np.random.default_rng(cfg.seed + 1)

    losses = []
    for _ in range(cfg.epochs):
        order = [train_idx[k] for k in shuffle_rng.permutation(len(train_idx))]
        epoch_losses = []
        for b0 in range(0, len(order), cfg.batch_size):
            batch = order[b0:b0 + cfg.batch_size]
            acc = {k: np.zeros_like(v) for k, v in model.params.items()}
            for i in batch:
                out, trace = egnn.forward(model, task.graphs[i])
                if task.kind == "apr":
                    loss, g = _apr_loss_grad(out.head, task.labels[i])
                else:
                    loss, g = _rpe_loss_grad(out.head, task.labels[i])
                epoch_losses.append(loss)
                for name, value in egnn.backward(model, trace, g).items():
                    acc[name] += value
            for name in acc:
                acc[name] /= len(batch)
            opt.step(model.params, acc)
        losses.append(float(np.mean(epoch_losses)))

    metric_name, metric_value = _evaluate(model, task, test_idx)
    return RunReport(
        task=task.kind,
        train_losses=losses,
        metric_name=metric_name,
        metric_value=metric_value,
        config={
            "model": {
                "n_layers": model_cfg.n_layers,
                "hidden_dim": model_cfg.hidden_dim,
                "in_dim": model_cfg.in_dim,
                "head": model_cfg.head,
                "l_max": model_cfg.l_max,
                "update_coords": model_cfg.update_coords,
                "seed": model_cfg.seed,
            },
            "train": {
                "epochs": cfg.epochs,
                "learning_rate": cfg.learning_rate,
                "beta1": cfg.beta1,
                "beta2": cfg.beta2,
                "eps": cfg.eps,
                "batch_size": cfg.batch_size,
                "seed": cfg.seed,
                "split": list(cfg.split),
            },
        },
        split_sizes={"train": len(train_idx), "val": len(val_idx), "test": len(test_idx)},
        wall_clock_seconds=time.perf_counter() - t0,
    )
