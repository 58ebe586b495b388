"""Structure-assessment metrics: rank/linear correlations, first-rank
loss, the RMSD family for docking, Kabsch superposition, GDT-TS, AUROC,
and affinity unit conversion.

Conventions (frozen):
  - ties: average ranks (spearman), tau-b (kendall), half credit (auroc)
  - docking RMSDs are computed WITHOUT superposition; the receptor is
    treated as fixed
  - the interface is defined on the true complex with a strict < cutoff
  - GDT-TS applies a single optimal superposition, then averages the
    fractions of points within 1/2/4/8 A
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    BadHeader,
    Degenerate,
    DegenerateVariance,
    EmptyInput,
    NoInterface,
    NonFiniteValue,
    NonPositiveAffinity,
    OneClassOnly,
    RowCountMismatch,
    SizeMismatch,
)

GDT_THRESHOLDS = (1.0, 2.0, 4.0, 8.0)


@dataclass(frozen=True)
class ScoredSet:
    """Per-target (predicted, true) score pairs, e.g. one MQA target's
    candidate structures."""

    target_id: str
    predicted: np.ndarray
    true: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.predicted, dtype=np.float64)
        t = np.asarray(self.true, dtype=np.float64)
        if p.shape != t.shape or p.ndim != 1:
            raise SizeMismatch(
                f"target {self.target_id}: predicted/true shapes differ "
                f"({p.shape} vs {t.shape})"
            )
        object.__setattr__(self, "predicted", p)
        object.__setattr__(self, "true", t)

    @property
    def n_items(self) -> int:
        return self.predicted.shape[0]


@dataclass(frozen=True)
class PointSet:
    label: str
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise SizeMismatch(f"points must be (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteValue("point set contains NaN/inf")
        object.__setattr__(self, "points", pts)


@dataclass
class MetricReport:
    suite: str
    n_targets: int
    metrics: dict[str, float]
    per_target: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "suite": self.suite,
                "n_targets": self.n_targets,
                "metrics": self.metrics,
                "per_target": self.per_target,
            },
            sort_keys=True,
        )


def _points(x) -> np.ndarray:
    if isinstance(x, PointSet):
        return x.points
    pts = np.asarray(x, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise SizeMismatch(f"points must be (N, 3), got {pts.shape}")
    return pts


def _pair(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise SizeMismatch(f"value lists differ in shape: {x.shape} vs {y.shape}")
    if x.shape[0] < 2:
        raise DegenerateVariance("correlation needs at least 2 items")
    return x, y


def pearson(xs, ys) -> float:
    """Product-moment correlation."""
    x, y = _pair(xs, ys)
    dx = x - x.mean()
    dy = y - y.mean()
    vx = np.dot(dx, dx)
    vy = np.dot(dy, dy)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateVariance("zero variance input")
    return float(np.clip(np.dot(dx, dy) / np.sqrt(vx * vy), -1.0, 1.0))


def _ranks(v: np.ndarray) -> np.ndarray:
    """Fractional ranks (1-based); ties get the mean of their positions."""
    order = np.argsort(v, kind="stable")
    sv = v[order]
    bounds = np.flatnonzero(np.r_[True, sv[1:] != sv[:-1], True])
    sizes = np.diff(bounds)
    # mean of positions bounds[k]..bounds[k+1]-1, 1-based
    mean_rank = (bounds[:-1] + bounds[1:] + 1) / 2.0
    ranks = np.empty(v.shape[0], dtype=np.float64)
    ranks[order] = np.repeat(mean_rank, sizes)
    return ranks


def spearman(xs, ys) -> float:
    """Pearson correlation of fractional ranks."""
    x, y = _pair(xs, ys)
    return pearson(_ranks(x), _ranks(y))


def kendall(xs, ys) -> float:
    """Tau-b: (concordant - discordant) / sqrt((n0-n1)(n0-n2)); equals
    plain pair counting when there are no ties."""
    x, y = _pair(xs, ys)
    n = x.shape[0]
    i, j = np.triu_indices(n, k=1)
    dx = np.sign(x[i] - x[j])
    dy = np.sign(y[i] - y[j])
    c_minus_d = float(np.sum(dx * dy))
    n0 = n * (n - 1) / 2.0
    n1 = n0 - float(np.sum(dx != 0))  # tied x pairs
    n2 = n0 - float(np.sum(dy != 0))
    denom = np.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0.0:
        raise DegenerateVariance("all pairs tied in one input")
    return float(np.clip(c_minus_d / denom, -1.0, 1.0))


_CORRELATIONS = {"pearson": pearson, "spearman": spearman, "kendall": kendall}


class MeanGlobal(NamedTuple):
    mean: float
    pooled: float
    n_skipped: int


def mean_and_global(sets: list[ScoredSet], which: str) -> MeanGlobal:
    """Unweighted mean of per-target correlations plus the correlation of
    the pooled items. Degenerate targets are skipped from the mean (and
    counted); degeneracy of the pool is an error."""
    if which not in _CORRELATIONS:
        raise ValueError(f"unknown correlation {which!r}")
    if not sets:
        raise EmptyInput("no targets")
    fn = _CORRELATIONS[which]
    values = []
    skipped = 0
    for s in sets:
        try:
            values.append(fn(s.predicted, s.true))
        except DegenerateVariance:
            skipped += 1
    if not values:
        raise DegenerateVariance("every target is degenerate")
    pooled = fn(
        np.concatenate([s.predicted for s in sets]),
        np.concatenate([s.true for s in sets]),
    )
    return MeanGlobal(float(np.mean(values)), pooled, skipped)


def first_rank_loss(sets: list[ScoredSet]) -> float:
    """Mean over targets of (best true score) minus (true score of the
    top-predicted item); prediction ties break by first occurrence."""
    if not sets:
        raise EmptyInput("no targets")
    gaps = []
    for s in sets:
        if s.n_items < 1:
            raise EmptyInput(f"target {s.target_id} has no items")
        gaps.append(float(s.true.max() - s.true[int(np.argmax(s.predicted))]))
    return float(np.mean(gaps))


def rmsd(a, b) -> float:
    """Root mean squared deviation over paired points, no superposition."""
    pa, pb = _points(a), _points(b)
    if pa.shape != pb.shape:
        raise SizeMismatch(f"point counts differ: {pa.shape[0]} vs {pb.shape[0]}")
    return float(np.sqrt(np.mean(np.sum((pa - pb) ** 2, axis=1))))


def _check_not_collinear(pts: np.ndarray):
    s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if s[1] <= max(1e-9 * s[0], 1e-12):
        raise Degenerate("point set is collinear (or a single point)")


def kabsch_superpose(a, b) -> tuple[np.ndarray, np.ndarray, float]:
    """Least-squares proper rotation R and translation t minimizing
    RMSD of (R a + t) onto b. Reflections are excluded: det(R) = +1.

    Returns (R, t, rmsd_after). Raises Degenerate for < 3 points or
    collinear inputs, where the rotation is not unique.
    """
    pa, pb = _points(a), _points(b)
    if pa.shape != pb.shape:
        raise SizeMismatch(f"point counts differ: {pa.shape[0]} vs {pb.shape[0]}")
    if pa.shape[0] < 3:
        raise Degenerate("superposition needs at least 3 points")
    _check_not_collinear(pa)
    _check_not_collinear(pb)

    ca = pa.mean(axis=0)
    cb = pb.mean(axis=0)
    h = (pa - ca).T @ (pb - cb)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = cb - r @ ca
    return r, t, rmsd(pa @ r.T + t, pb)


def gdt_ts(model, reference) -> float:
    """Threshold-averaged fraction of points within 1/2/4/8 A after one
    optimal superposition of the model onto the reference."""
    pm, pr = _points(model), _points(reference)
    if pm.shape != pr.shape:
        raise SizeMismatch(f"point counts differ: {pm.shape[0]} vs {pr.shape[0]}")
    r, t, _ = kabsch_superpose(pm, pr)
    dist = np.linalg.norm(pm @ r.T + t - pr, axis=1)
    return float(np.mean([(dist <= thr).mean() for thr in GDT_THRESHOLDS]))


def interface_rmsd(true_receptor, true_ligand, pred_ligand, cutoff: float = 8.0) -> float:
    """RMSD over the true complex's interface, receptor held fixed.

    Interface membership uses the true complex with a strict < cutoff.
    Because the receptor is fixed its deviations are identically zero,
    so the average runs over the ligand's interface residues (including
    zero receptor terms would only dilute the value).
    """
    rec = _points(true_receptor)
    lig = _points(true_ligand)
    pred = _points(pred_ligand)
    if lig.shape != pred.shape:
        raise SizeMismatch(f"ligand point counts differ: {lig.shape[0]} vs {pred.shape[0]}")
    cross = np.linalg.norm(rec[:, None, :] - lig[None, :, :], axis=2)
    lig_iface = np.flatnonzero((cross < cutoff).any(axis=0))
    if lig_iface.size == 0:
        raise NoInterface(f"no residue pair under {cutoff} A")
    return rmsd(lig[lig_iface], pred[lig_iface])


def auroc(scores, labels) -> float:
    """Mann-Whitney statistic: probability a positive outranks a negative,
    with half credit for score ties."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise SizeMismatch(f"scores/labels shapes differ: {s.shape} vs {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise OneClassOnly("labels must be 0/1")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly("need at least one positive and one negative")
    ranks = _ranks(s)
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pk_from_molar(k: float) -> float:
    """pK of a binding constant in Molar units: -log10(k)."""
    if not (k > 0) or not np.isfinite(k):
        raise NonPositiveAffinity(f"affinity must be a positive Molar value, got {k}")
    return float(-np.log10(k))


# --- point-list wire format ---

def read_pts(text: str) -> np.ndarray:
    """Parse the PTS format: 'PTS1 <N>' then N lines of x y z."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise BadHeader("empty PTS input")
    head = lines[0].split(" ")
    if len(head) != 2 or head[0] != "PTS1":
        raise BadHeader(f"bad PTS header {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise BadHeader(f"non-integer count in {lines[0]!r}") from None
    if n < 1:
        raise BadHeader("PTS needs n >= 1")
    rows = lines[1:]
    if len(rows) != n:
        raise RowCountMismatch(f"header claims {n} points, file has {len(rows)}")
    out = np.empty((n, 3), dtype=np.float64)
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 3:
            raise RowCountMismatch(f"point {i}: expected 3 coordinates")
        try:
            out[i] = [float(p) for p in parts]
        except ValueError:
            raise NonFiniteValue(f"point {i}: unparseable coordinate") from None
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("PTS contains NaN/inf")
    return out


def write_pts(points) -> str:
    pts = _points(points)
    lines = [f"PTS1 {pts.shape[0]}"]
    for row in pts:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


# --- benchmark suites ---

def suite_mqa(sets: list[ScoredSet]) -> MetricReport:
    """Mean/global correlations plus first-rank loss over ranking targets."""
    if not sets:
        raise EmptyInput("no targets")
    metrics: dict[str, float] = {"first_rank_loss": first_rank_loss(sets)}
    per_target = []
    for s in sets:
        row: dict = {"target_id": s.target_id, "n_items": s.n_items}
        for kind, fn in _CORRELATIONS.items():
            try:
                row[kind] = fn(s.predicted, s.true)
            except DegenerateVariance:
                row[kind] = None
        row["first_rank_gap"] = first_rank_loss([s])
        per_target.append(row)
    for kind in _CORRELATIONS:
        mg = mean_and_global(sets, kind)
        metrics[f"{kind}_mean"] = mg.mean
        metrics[f"{kind}_global"] = mg.pooled
        metrics[f"{kind}_skipped"] = float(mg.n_skipped)
    return MetricReport("mqa", len(sets), metrics, per_target)


def suite_docking(
    complexes: list[tuple[str, PointSet, PointSet, PointSet]],
    cutoff: float = 8.0,
) -> MetricReport:
    """Complex / ligand / interface RMSD per predicted complex, with
    median/mean/std aggregates. Each entry is (target_id, true receptor,
    true ligand, predicted ligand); the receptor never moves."""
    if not complexes:
        raise EmptyInput("no complexes")
    per_target = []
    for target_id, rec, lig, pred in complexes:
        rec_p, lig_p, pred_p = _points(rec), _points(lig), _points(pred)
        row = {
            "target_id": target_id,
            "complex_rmsd": rmsd(
                np.vstack([rec_p, lig_p]), np.vstack([rec_p, pred_p])
            ),
            "ligand_rmsd": rmsd(lig_p, pred_p),
            "interface_rmsd": interface_rmsd(rec_p, lig_p, pred_p, cutoff),
        }
        per_target.append(row)
    metrics: dict[str, float] = {}
    for name in ("complex_rmsd", "ligand_rmsd", "interface_rmsd"):
        vals = np.array([row[name] for row in per_target])
        metrics[f"{name}_median"] = float(np.median(vals))
        metrics[f"{name}_mean"] = float(np.mean(vals))
        metrics[f"{name}_std"] = float(np.std(vals))
    return MetricReport("docking", len(complexes), metrics, per_target)


def suite_ppi(scores, labels) -> MetricReport:
    """Contact-prediction quality as AUROC over pooled residue pairs."""
    return MetricReport("ppi", 1, {"auroc": auroc(scores, labels)})


def suite_lba(predicted_pk, true_pk) -> MetricReport:
    """Affinity regression: RMSD of pK plus the three correlations."""
    p = np.asarray(predicted_pk, dtype=np.float64)
    t = np.asarray(true_pk, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1:
        raise SizeMismatch(f"predicted/true shapes differ: {p.shape} vs {t.shape}")
    metrics = {"rmsd": float(np.sqrt(np.mean((p - t) ** 2)))}
    for kind, fn in _CORRELATIONS.items():
        metrics[kind] = fn(p, t)
    return MetricReport("lba", 1, metrics)
