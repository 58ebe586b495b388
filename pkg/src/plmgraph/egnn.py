"""A from-scratch E(n)-equivariant graph network in float64 numpy.

Each layer computes edge messages from (h_i, h_j, squared distance,
build-time edge length), optionally moves coordinates along normalized
difference vectors, and updates node states through a residual MLP:

    m_ij  = f_e(h_i, h_j, |x_i - x_j|^2, e_ij)
    x_i  += sum_j (x_i - x_j) * f_x(m_ij) / (|x_i - x_j| + 1)   [optional]
    h_i  += f_h(h_i, sum_j m_ij)

All MLPs are 2-layer with SiLU. Scalar heads see geometry only through
squared distances, so they are invariant under rotation, translation and
reflection; coordinate outputs transform covariantly.

Aggregation sums each node's incoming messages in ascending value order
(canonical per multiset), which makes node sums independent of edge and
node labeling: permutation equivariance is exact, not approximate.

Backward passes are hand-derived reverse mode over cached activations;
gradients are exact up to float64 rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DimMismatch, TraceConsumed
from .graphbuild import ResidueGraph

HEADS = ("node_class", "node_regress", "graph_regress")
CHECKPOINT_VERSION = "EGNN1"


@dataclass(frozen=True)
class EgnnConfig:
    n_layers: int
    hidden_dim: int
    in_dim: int
    head: str
    l_max: int = 0
    update_coords: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_layers < 1 or self.hidden_dim < 1 or self.in_dim < 1:
            raise ConfigError("n_layers, hidden_dim and in_dim must be >= 1")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.head == "node_class" and self.l_max < 1:
            raise ConfigError("node_class head needs l_max >= 1")


@dataclass
class EgnnModel:
    config: EgnnConfig
    params: dict[str, np.ndarray]


@dataclass
class EgnnOutputs:
    head: np.ndarray                 # (N, l_max) logits, (N,) or () scalar
    coords: Optional[np.ndarray]     # final coordinates when update_coords


@dataclass
class ForwardTrace:
    graph: ResidueGraph
    layers: list[dict]
    h_final: np.ndarray
    pooled: Optional[np.ndarray]
    consumed: bool = field(default=False)


def _param_spec(cfg: EgnnConfig) -> list[tuple[str, tuple[int, ...], int]]:
    """(name, shape, fan_in) for every block, in deterministic draw order."""
    h = cfg.hidden_dim
    spec: list[tuple[str, tuple[int, ...], int]] = [
        ("embed.W", (h, cfg.in_dim), cfg.in_dim),
        ("embed.b", (h,), 0),
    ]
    for l in range(cfg.n_layers):
        p = f"layer{l}"
        spec += [
            (f"{p}.edge.W1", (h, 2 * h + 2), 2 * h + 2),
            (f"{p}.edge.b1", (h,), 0),
            (f"{p}.edge.W2", (h, h), h),
            (f"{p}.edge.b2", (h,), 0),
        ]
        if cfg.update_coords:
            spec += [
                (f"{p}.coord.W1", (h, h), h),
                (f"{p}.coord.b1", (h,), 0),
                (f"{p}.coord.W2", (1, h), h),
                (f"{p}.coord.b2", (1,), 0),
            ]
        spec += [
            (f"{p}.node.W1", (h, 2 * h), 2 * h),
            (f"{p}.node.b1", (h,), 0),
            (f"{p}.node.W2", (h, h), h),
            (f"{p}.node.b2", (h,), 0),
        ]
    out = cfg.l_max if cfg.head == "node_class" else 1
    spec += [("head.W", (out, h), h), ("head.b", (out,), 0)]
    return spec


def init_model(cfg: EgnnConfig) -> EgnnModel:
    """Fan-in scaled uniform weights U(-1/sqrt(fan_in), +1/sqrt(fan_in));
    biases zero. Bitwise deterministic for a given seed."""
    rng = np.random.default_rng(cfg.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape, fan_in in _param_spec(cfg):
        if fan_in == 0:
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape)
    return EgnnModel(cfg, params)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _silu(z: np.ndarray) -> np.ndarray:
    return z * _sigmoid(z)


def _silu_grad(z: np.ndarray) -> np.ndarray:
    s = _sigmoid(z)
    return s * (1.0 + z * (1.0 - s))


def _segment_sum(values: np.ndarray, seg: np.ndarray, n: int) -> np.ndarray:
    """Sum rows of `values` into `n` buckets given by `seg`.

    Each bucket's addends are summed in ascending value order per column,
    so the result depends only on the multiset of values per bucket --
    not on edge ordering or node labeling.
    """
    if values.shape[0] == 0:
        return np.zeros((n, values.shape[1]), dtype=np.float64)
    by_value = np.argsort(values, axis=0, kind="stable")
    by_seg = np.argsort(seg[by_value], axis=0, kind="stable")
    order = np.take_along_axis(by_value, by_seg, axis=0)
    sorted_vals = np.take_along_axis(values, order, axis=0)

    counts = np.bincount(seg, minlength=n)
    present = np.flatnonzero(counts)
    starts = np.zeros(len(present), dtype=np.int64)
    starts[1:] = np.cumsum(counts[present])[:-1]
    out = np.zeros((n, values.shape[1]), dtype=np.float64)
    out[present] = np.add.reduceat(sorted_vals, starts, axis=0)
    return out


def _canonical_mean(h: np.ndarray) -> np.ndarray:
    # column-sorted summation: invariant to node order
    return np.sort(h, axis=0).sum(axis=0) / h.shape[0]


def forward(model: EgnnModel, g: ResidueGraph) -> tuple[EgnnOutputs, ForwardTrace]:
    """Run the network on a graph; returns head outputs plus a trace
    holding every activation the backward pass needs."""
    cfg = model.config
    if g.feat_dim != cfg.in_dim:
        raise DimMismatch(
            f"graph features have dim {g.feat_dim}, model expects {cfg.in_dim}"
        )
    p = model.params
    n = g.n
    src = g.edges[:, 0] if g.n_edges else np.zeros(0, dtype=np.int64)
    dst = g.edges[:, 1] if g.n_edges else np.zeros(0, dtype=np.int64)
    eattr = g.edge_scalars.reshape(-1, 1)

    h = g.node_feats @ p["embed.W"].T + p["embed.b"]
    x = g.coords
    layers = []
    for l in range(cfg.n_layers):
        pre = f"layer{l}"
        cache: dict = {"h_in": h, "x_in": x}

        diff = x[src] - x[dst]
        d2 = np.einsum("ij,ij->i", diff, diff)
        edge_in = np.concatenate([h[src], h[dst], d2[:, None], eattr], axis=1)
        t1 = edge_in @ p[f"{pre}.edge.W1"].T + p[f"{pre}.edge.b1"]
        a1 = _silu(t1)
        t2 = a1 @ p[f"{pre}.edge.W2"].T + p[f"{pre}.edge.b2"]
        m = _silu(t2)
        cache.update(diff=diff, d2=d2, edge_in=edge_in, t1=t1, a1=a1, t2=t2, m=m)

        if cfg.update_coords:
            c1 = m @ p[f"{pre}.coord.W1"].T + p[f"{pre}.coord.b1"]
            ca1 = _silu(c1)
            phi = ca1 @ p[f"{pre}.coord.W2"].T + p[f"{pre}.coord.b2"]
            dist = np.sqrt(d2)
            w = diff / (dist + 1.0)[:, None]
            x = x + _segment_sum(phi * w, src, n)
            cache.update(c1=c1, ca1=ca1, phi=phi, dist=dist, w=w)

        agg = _segment_sum(m, src, n)
        node_in = np.concatenate([h, agg], axis=1)
        n1 = node_in @ p[f"{pre}.node.W1"].T + p[f"{pre}.node.b1"]
        na1 = _silu(n1)
        n2 = na1 @ p[f"{pre}.node.W2"].T + p[f"{pre}.node.b2"]
        h = h + n2
        cache.update(agg=agg, node_in=node_in, n1=n1, na1=na1)
        layers.append(cache)

    pooled = None
    if cfg.head == "node_class":
        out = h @ p["head.W"].T + p["head.b"]
    elif cfg.head == "node_regress":
        out = (h @ p["head.W"].T + p["head.b"])[:, 0]
    else:
        pooled = _canonical_mean(h)
        out = (pooled @ p["head.W"].T + p["head.b"])[0]

    trace = ForwardTrace(graph=g, layers=layers, h_final=h, pooled=pooled)
    coords = x if cfg.update_coords else None
    return EgnnOutputs(head=np.asarray(out), coords=coords), trace


def backward(model: EgnnModel, trace: ForwardTrace, loss_grad: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of a scalar loss (whose gradient w.r.t. the head
    output is `loss_grad`) with respect to every parameter."""
    if trace.consumed:
        raise TraceConsumed("trace was already used by a backward pass")
    trace.consumed = True

    cfg = model.config
    p = model.params
    g = trace.graph
    n = g.n
    hd = cfg.hidden_dim
    src = g.edges[:, 0] if g.n_edges else np.zeros(0, dtype=np.int64)
    dst = g.edges[:, 1] if g.n_edges else np.zeros(0, dtype=np.int64)

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    h_final = trace.h_final
    loss_grad = np.asarray(loss_grad, dtype=np.float64)

    if cfg.head == "node_class":
        grads["head.W"] += loss_grad.T @ h_final
        grads["head.b"] += loss_grad.sum(axis=0)
        g_h = loss_grad @ p["head.W"]
    elif cfg.head == "node_regress":
        gl = loss_grad.reshape(-1, 1)
        grads["head.W"] += gl.T @ h_final
        grads["head.b"] += gl.sum(axis=0)
        g_h = gl @ p["head.W"]
    else:
        gl = loss_grad.reshape(1)
        grads["head.W"] += gl[:, None] * trace.pooled[None, :]
        grads["head.b"] += gl
        g_h = np.broadcast_to(gl @ p["head.W"] / n, h_final.shape).copy()

    g_x = np.zeros((n, 3)) if cfg.update_coords else None

    for l in range(cfg.n_layers - 1, -1, -1):
        pre = f"layer{l}"
        c = trace.layers[l]

        # h_out = h_in + node MLP(node_in)
        g_n2 = g_h
        grads[f"{pre}.node.W2"] += g_n2.T @ c["na1"]
        grads[f"{pre}.node.b2"] += g_n2.sum(axis=0)
        g_n1 = (g_n2 @ p[f"{pre}.node.W2"]) * _silu_grad(c["n1"])
        grads[f"{pre}.node.W1"] += g_n1.T @ c["node_in"]
        grads[f"{pre}.node.b1"] += g_n1.sum(axis=0)
        g_node_in = g_n1 @ p[f"{pre}.node.W1"]
        g_h = g_h + g_node_in[:, :hd]          # residual + concat slot
        g_m = g_node_in[:, hd:][src]           # through the segment sum

        if cfg.update_coords:
            g_delta = g_x[src]
            g_phi = np.einsum("ij,ij->i", g_delta, c["w"])[:, None]
            g_w = g_delta * c["phi"]
            grads[f"{pre}.coord.W2"] += g_phi.T @ c["ca1"]
            grads[f"{pre}.coord.b2"] += g_phi.sum(axis=0)
            g_c1 = (g_phi @ p[f"{pre}.coord.W2"]) * _silu_grad(c["c1"])
            grads[f"{pre}.coord.W1"] += g_c1.T @ c["m"]
            grads[f"{pre}.coord.b1"] += g_c1.sum(axis=0)
            g_m = g_m + g_c1 @ p[f"{pre}.coord.W1"]

            denom = c["dist"] + 1.0
            g_diff_w = g_w / denom[:, None]
            g_dist = -np.einsum("ij,ij->i", g_w, c["diff"]) / denom**2
            # d(dist)/d(d2) = 1/(2 dist); at dist=0 the numerator vanishes
            with np.errstate(divide="ignore", invalid="ignore"):
                g_d2_coord = np.where(c["dist"] > 0, g_dist / (2.0 * c["dist"]), 0.0)
        else:
            g_diff_w = 0.0
            g_d2_coord = 0.0

        g_t2 = g_m * _silu_grad(c["t2"])
        grads[f"{pre}.edge.W2"] += g_t2.T @ c["a1"]
        grads[f"{pre}.edge.b2"] += g_t2.sum(axis=0)
        g_t1 = (g_t2 @ p[f"{pre}.edge.W2"]) * _silu_grad(c["t1"])
        grads[f"{pre}.edge.W1"] += g_t1.T @ c["edge_in"]
        grads[f"{pre}.edge.b1"] += g_t1.sum(axis=0)
        g_edge_in = g_t1 @ p[f"{pre}.edge.W1"]

        np.add.at(g_h, src, g_edge_in[:, :hd])
        np.add.at(g_h, dst, g_edge_in[:, hd:2 * hd])
        g_d2 = g_edge_in[:, 2 * hd] + g_d2_coord
        g_diff = 2.0 * c["diff"] * g_d2[:, None] + g_diff_w

        if cfg.update_coords:
            g_x_new = g_x.copy()
            np.add.at(g_x_new, src, g_diff)
            np.add.at(g_x_new, dst, -g_diff)
            g_x = g_x_new
        # with static coords, input-coordinate gradients are not needed

    # input embedding
    grads["embed.W"] += g_h.T @ g.node_feats
    grads["embed.b"] += g_h.sum(axis=0)
    return grads


def save_checkpoint(model: EgnnModel) -> str:
    cfg = model.config
    doc = {
        "version": CHECKPOINT_VERSION,
        "config": {
            "n_layers": cfg.n_layers,
            "hidden_dim": cfg.hidden_dim,
            "in_dim": cfg.in_dim,
            "head": cfg.head,
            "l_max": cfg.l_max,
            "update_coords": cfg.update_coords,
            "seed": cfg.seed,
        },
        "params": {
            name: {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
            for name, arr in sorted(model.params.items())
        },
    }
    return json.dumps(doc)


def load_checkpoint(text: str) -> EgnnModel:
    doc = json.loads(text)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {doc.get('version')!r}")
    cfg = EgnnConfig(**doc["config"])
    params = {
        name: np.asarray(block["data"], dtype=np.float64).reshape(block["shape"])
        for name, block in doc["params"].items()
    }
    expected = {name: shape for name, shape, _ in _param_spec(cfg)}
    for name, shape in expected.items():
        if name not in params or tuple(params[name].shape) != shape:
            raise ConfigError(f"checkpoint block {name} missing or misshaped")
    return EgnnModel(cfg, params)
