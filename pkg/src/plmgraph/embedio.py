"""The PRE per-residue embedding format, plus synthetic position embeddings.

PRE grammar (bit-exact):
    line 1: "PRE1 <N> <D>"     single spaces, decimal integers
    line 2: "src=<tag>"        tag contains no spaces
    then N lines, each D space-separated decimal reals, LF endings.

Values are written with 17 significant digits, so a write/read round trip
reproduces every float64 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadHeader,
    ColumnCountMismatch,
    DimTooSmall,
    NonFiniteValue,
    RowCountMismatch,
)


@dataclass(frozen=True)
class EmbeddingMatrix:
    """An N x D real matrix of per-residue embeddings with a source tag."""

    data: np.ndarray
    source: str = "unknown"
    n_rows: int = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise RowCountMismatch(f"embedding must be 2-D non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("embedding contains NaN/inf")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "n_rows", arr.shape[0])
        object.__setattr__(self, "dim", arr.shape[1])


def read_pre(text: str) -> EmbeddingMatrix:
    """Parse PRE text; raises a typed error on any grammar violation."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # single trailing newline is fine
    if len(lines) < 2:
        raise BadHeader("PRE needs a header line and a src line")

    head = lines[0].split(" ")
    if len(head) != 3 or head[0] != "PRE1":
        raise BadHeader(f"bad header line {lines[0]!r}")
    try:
        n, d = int(head[1]), int(head[2])
    except ValueError:
        raise BadHeader(f"non-integer dimensions in {lines[0]!r}") from None
    if n < 1 or d < 1:
        raise BadHeader(f"dimensions must be >= 1, got {n} x {d}")

    if not lines[1].startswith("src=") or " " in lines[1]:
        raise BadHeader(f"bad src line {lines[1]!r}")
    source = lines[1][4:]

    rows = lines[2:]
    if len(rows) != n:
        raise RowCountMismatch(f"header claims {n} rows, file has {len(rows)}")

    data = np.empty((n, d), dtype=np.float64)
    for i, row in enumerate(rows):
        fields = row.split()
        if len(fields) != d:
            raise ColumnCountMismatch(
                f"row {i}: expected {d} columns, got {len(fields)}"
            )
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise NonFiniteValue(f"row {i}: unparseable real in {row!r}") from None
        data[i] = values
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue("matrix contains NaN/inf")
    return EmbeddingMatrix(data, source)


def write_pre(e: EmbeddingMatrix) -> str:
    tag = "_".join(e.source.split())  # grammar forbids whitespace in the tag
    lines = [f"PRE1 {e.n_rows} {e.dim}", f"src={tag}"]
    for row in e.data:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def synth_positional(n: int, dim: int, kind: str = "sinusoidal") -> EmbeddingMatrix:
    """Synthetic embeddings that carry each row's position index.

    'onehot_index' puts the i-th standard basis vector in row i (needs
    dim >= n); 'sinusoidal' interleaves sin/cos of the position at
    geometrically spaced frequencies, transformer style. Rows are
    pairwise distinct either way.
    """
    if n < 1:
        raise DimTooSmall("need n >= 1")
    if kind == "onehot_index":
        if dim < n:
            raise DimTooSmall(f"onehot_index needs dim >= n, got {dim} < {n}")
        data = np.zeros((n, dim), dtype=np.float64)
        data[np.arange(n), np.arange(n)] = 1.0
        return EmbeddingMatrix(data, "synthetic")
    if kind == "sinusoidal":
        if dim < 1:
            raise DimTooSmall("need dim >= 1")
        pos = np.arange(n, dtype=np.float64)[:, None]
        k = np.arange((dim + 1) // 2, dtype=np.float64)[None, :]
        angle = pos / np.power(10000.0, 2.0 * k / dim)
        data = np.empty((n, 2 * ((dim + 1) // 2)), dtype=np.float64)
        data[:, 0::2] = np.sin(angle)
        data[:, 1::2] = np.cos(angle)
        return EmbeddingMatrix(data[:, :dim].copy(), "synthetic")
    raise ValueError(f"unknown positional kind {kind!r}")
