"""Global pairwise alignment (Needleman-Wunsch, linear gap penalty).

Used to reconcile a full FASTA sequence with the fragmentary sequence
recovered from a structure, producing the residue-index map that selects
which embedding rows to keep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, InputTooLong
from .structio import Sequence

# O(len_a * len_b) memory; refuse anything past this bound.
MAX_ALIGN_LEN = 20_000

GAP = "-"


@dataclass(frozen=True)
class Scoring:
    match: int = 1
    mismatch: int = -1
    gap: int = -1


@dataclass(frozen=True)
class Alignment:
    """A global alignment; index_map lists (a_index, b_index) for every
    column where both sequences have a residue (match or mismatch)."""

    aligned_a: str
    aligned_b: str
    score: int

    @property
    def index_map(self) -> list[tuple[int, int]]:
        pairs = []
        ia = ib = 0
        for ca, cb in zip(self.aligned_a, self.aligned_b):
            if ca != GAP and cb != GAP:
                pairs.append((ia, ib))
            if ca != GAP:
                ia += 1
            if cb != GAP:
                ib += 1
        return pairs

    @property
    def len_a(self) -> int:
        return len(self.aligned_a) - self.aligned_a.count(GAP)

    @property
    def len_b(self) -> int:
        return len(self.aligned_b) - self.aligned_b.count(GAP)


def align_global(a: Sequence, b: Sequence, scoring: Scoring = Scoring()) -> Alignment:
    """Optimal global alignment of a against b under a linear gap penalty.

    Traceback ties are broken deterministically: substitution first, then
    gap in a (consume b), then gap in b (consume a).
    """
    sa, sb = a.residues, b.residues
    if not sa or not sb:
        raise EmptyInput("cannot align an empty sequence")
    if len(sa) > MAX_ALIGN_LEN or len(sb) > MAX_ALIGN_LEN:
        raise InputTooLong(
            f"alignment limited to {MAX_ALIGN_LEN} residues, "
            f"got {len(sa)} x {len(sb)}"
        )

    n, m = len(sa), len(sb)
    gap = scoring.gap
    f = np.empty((n + 1, m + 1), dtype=np.int64)
    f[0, :] = gap * np.arange(m + 1)
    f[:, 0] = gap * np.arange(n + 1)

    eq = np.frombuffer(sa.encode(), dtype=np.uint8)[:, None] == np.frombuffer(
        sb.encode(), dtype=np.uint8
    )[None, :]
    sub = np.where(eq, scoring.match, scoring.mismatch)

    # Row recurrence f[i,j] = max(diag, up, f[i,j-1]+gap); the horizontal
    # term is a running max of (candidate[k] - gap*k), so each row is one
    # vectorized prefix scan instead of a Python inner loop.
    js = np.arange(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cand = np.empty(m + 1, dtype=np.int64)
        cand[0] = f[i, 0]
        cand[1:] = np.maximum(f[i - 1, :-1] + sub[i - 1], f[i - 1, 1:] + gap)
        f[i] = gap * js + np.maximum.accumulate(cand - gap * js)

    out_a: list[str] = []
    out_b: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and f[i, j] == f[i - 1, j - 1] + sub[i - 1, j - 1]:
            out_a.append(sa[i - 1])
            out_b.append(sb[j - 1])
            i -= 1
            j -= 1
        elif j > 0 and f[i, j] == f[i, j - 1] + gap:
            out_a.append(GAP)
            out_b.append(sb[j - 1])
            j -= 1
        else:
            out_a.append(sa[i - 1])
            out_b.append(GAP)
            i -= 1

    return Alignment("".join(reversed(out_a)), "".join(reversed(out_b)), int(f[n, m]))


def restrict_embedding(e, al: Alignment):
    """Keep only embedding rows whose a-side residue matched in al.

    The embedding must cover the full a-side sequence (one row per
    residue). Rows are selected in index_map order, which is strictly
    increasing, so the output is never reordered.
    """
    from .embedio import EmbeddingMatrix

    if e.n_rows != al.len_a:
        raise DimensionMismatch(
            f"embedding has {e.n_rows} rows but alignment side a "
            f"has {al.len_a} residues"
        )
    rows = [ia for ia, _ in al.index_map]
    return EmbeddingMatrix(np.asarray(e.data)[rows].copy(), e.source)
