"""Residue-level 3D graph construction (KNN / r-ball / fully connected).

Nodes are residues located at their CA atoms. Edges are directed (i, j)
pairs; KNN keeps the asymmetric neighborhoods (i -> j means j is among
i's k nearest), while r-ball and FC edge sets are symmetric. Every edge
carries its Euclidean length in Angstroms as a scalar attribute. The
edge list is always sorted by (i, j).

Base node features are a one-hot over the 21-symbol alphabet (20 amino
acids + X); fused features replace, extend, or add to them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonPositiveCutoff, RowCountMismatch, SumDimMismatch, TooFewResidues
from .structio import AA_ALPHABET_X, Structure

MODES = ("knn", "rball", "fc")


@dataclass(frozen=True)
class ResidueGraph:
    coords: np.ndarray       # (N, 3) float64, Angstroms
    node_feats: np.ndarray   # (N, dim) float64
    edges: np.ndarray        # (M, 2) int64, sorted by (i, j), no self-loops
    edge_scalars: np.ndarray  # (M,) float64, Euclidean edge lengths
    mode: str

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feat_dim(self) -> int:
        return self.node_feats.shape[1]

    def to_json(self) -> str:
        """Serialize to the graph JSON wire format (node_feats row-major)."""
        doc = {
            "n": self.n,
            "mode": self.mode,
            "coords": [[float(v) for v in row] for row in self.coords],
            "node_feats_dim": self.feat_dim,
            "node_feats": [float(v) for v in self.node_feats.ravel()],
            "edges": [[int(i), int(j)] for i, j in self.edges],
            "edge_scalars": [float(v) for v in self.edge_scalars],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ResidueGraph":
        doc = json.loads(text)
        n = int(doc["n"])
        dim = int(doc["node_feats_dim"])
        feats = np.asarray(doc["node_feats"], dtype=np.float64).reshape(n, dim)
        edges = np.asarray(doc["edges"], dtype=np.int64).reshape(-1, 2)
        return cls(
            coords=np.asarray(doc["coords"], dtype=np.float64).reshape(n, 3),
            node_feats=feats,
            edges=edges,
            edge_scalars=np.asarray(doc["edge_scalars"], dtype=np.float64),
            mode=str(doc["mode"]),
        )


def _ca_matrix(s: Structure) -> tuple[np.ndarray, str]:
    coords = []
    letters = []
    for chain in s.chains:
        for r in chain.residues:
            coords.append(r.ca)
            letters.append(r.aa)
    return np.asarray(coords, dtype=np.float64), "".join(letters)


def onehot_features(aa: str) -> np.ndarray:
    """One-hot rows over the 21-symbol alphabet, in AA_ALPHABET_X order."""
    index = {c: k for k, c in enumerate(AA_ALPHABET_X)}
    feats = np.zeros((len(aa), len(AA_ALPHABET_X)), dtype=np.float64)
    for i, ch in enumerate(aa):
        feats[i, index.get(ch, index["X"])] = 1.0
    return feats


def _pairwise_distances(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _finish(coords, aa, edges, mode) -> ResidueGraph:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size:
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        scalars = np.linalg.norm(coords[edges[:, 0]] - coords[edges[:, 1]], axis=1)
    else:
        scalars = np.zeros(0, dtype=np.float64)
    return ResidueGraph(coords, onehot_features(aa), edges, scalars, mode)


def build_knn(s: Structure, k: int = 10) -> ResidueGraph:
    """Directed edge i -> j iff j is among the k nearest residues of i.

    Distance ties break toward the lower residue index; out-degree is
    min(k, N - 1) for every node.
    """
    coords, aa = _ca_matrix(s)
    n = coords.shape[0]
    if n < 2:
        raise TooFewResidues(f"KNN graph needs >= 2 residues, got {n}")
    k_eff = min(k, n - 1)

    d = _pairwise_distances(coords)
    np.fill_diagonal(d, np.inf)
    # lexsort: primary key distance, ties by column index (lower j wins)
    cols = np.broadcast_to(np.arange(n), (n, n))
    order = np.lexsort((cols, d), axis=1)[:, :k_eff]
    src = np.repeat(np.arange(n), k_eff)
    return _finish(coords, aa, np.column_stack([src, order.ravel()]), "knn")


def build_rball(s: Structure, cutoff_angstrom: float = 8.0) -> ResidueGraph:
    """Symmetric edges for every pair at distance <= cutoff (inclusive)."""
    if not cutoff_angstrom > 0:
        raise NonPositiveCutoff(f"cutoff must be positive, got {cutoff_angstrom}")
    coords, aa = _ca_matrix(s)
    n = coords.shape[0]
    if n < 2:
        raise TooFewResidues(f"r-ball graph needs >= 2 residues, got {n}")

    d = _pairwise_distances(coords)
    np.fill_diagonal(d, np.inf)
    src, dst = np.nonzero(d <= cutoff_angstrom)
    return _finish(coords, aa, np.column_stack([src, dst]), "rball")


def build_fc(s: Structure) -> ResidueGraph:
    """All ordered pairs i != j; M = N(N-1)."""
    coords, aa = _ca_matrix(s)
    n = coords.shape[0]
    if n < 2:
        raise TooFewResidues(f"FC graph needs >= 2 residues, got {n}")
    src, dst = np.nonzero(~np.eye(n, dtype=bool))
    return _finish(coords, aa, np.column_stack([src, dst]), "fc")


def attach_features(g: ResidueGraph, feats: np.ndarray, mode: str = "replace") -> ResidueGraph:
    """Fuse an (N, d) feature matrix into the graph's node features.

    replace: new dim = d; concat: new dim = old + d; sum: element-wise,
    dims must match exactly (no implicit projection).
    """
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] != g.n:
        raise RowCountMismatch(
            f"feature rows ({feats.shape[0] if feats.ndim == 2 else feats.shape}) "
            f"!= node count ({g.n})"
        )
    if mode == "replace":
        fused = feats.copy()
    elif mode == "concat":
        fused = np.concatenate([g.node_feats, feats], axis=1)
    elif mode == "sum":
        if feats.shape[1] != g.feat_dim:
            raise SumDimMismatch(
                f"sum needs equal dims, got {g.feat_dim} and {feats.shape[1]}"
            )
        fused = g.node_feats + feats
    else:
        raise ValueError(f"unknown fusion mode {mode!r}")
    return replace(g, node_feats=fused)
