import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plmgraph.embedio import EmbeddingMatrix
from plmgraph.errors import DimensionMismatch, EmptyInput, InputTooLong
from plmgraph.seqalign import Alignment, Scoring, align_global, restrict_embedding
from plmgraph.structio import Sequence

from oracles import best_alignment_score

S = Scoring(1, -1, -1)


def seq(text: str) -> Sequence:
    return Sequence("t", text)


def test_identity_alignment():
    al = align_global(seq("ACD"), seq("ACD"), S)
    assert al.score == 3
    assert al.aligned_a == "ACD" and al.aligned_b == "ACD"
    assert al.index_map == [(0, 0), (1, 1), (2, 2)]


def test_single_deletion():
    # oracle: exhaustive enumeration of all global alignments of ACD vs AD
    assert best_alignment_score("ACD", "AD") == 1
    al = align_global(seq("ACD"), seq("AD"), S)
    assert al.score == 1
    assert (al.aligned_a, al.aligned_b) == ("ACD", "A-D")
    assert al.index_map == [(0, 0), (2, 1)]


def test_single_mismatch_beats_double_gap():
    # oracle: the three possible alignments score -1 (subst), -2, -2
    assert best_alignment_score("A", "G") == -1
    al = align_global(seq("A"), seq("G"), S)
    assert al.score == -1
    assert (al.aligned_a, al.aligned_b) == ("A", "G")


def test_empty_input():
    with pytest.raises(EmptyInput):
        align_global(seq("ACD"), Sequence("e", ""), S)


def test_too_long_rejected():
    long = Sequence("l", "A" * 20001)
    with pytest.raises(InputTooLong):
        align_global(long, seq("AAA"), S)


def test_gap_removal_recovers_inputs():
    al = align_global(seq("ACDEFG"), seq("ADG"), S)
    assert al.aligned_a.replace("-", "") == "ACDEFG"
    assert al.aligned_b.replace("-", "") == "ADG"
    assert len(al.aligned_a) == len(al.aligned_b)


@settings(max_examples=300, deadline=None)
@given(
    st.text(alphabet="ACG", min_size=1, max_size=6),
    st.text(alphabet="ACG", min_size=1, max_size=6),
)
def test_score_optimality_vs_enumeration(a, b):
    al = align_global(seq(a), seq(b), S)
    assert al.score == best_alignment_score(a, b)
    # structural invariants
    assert al.aligned_a.replace("-", "") == a
    assert al.aligned_b.replace("-", "") == b
    pairs = al.index_map
    assert all(p1 < p2 for p1, p2 in zip(pairs, pairs[1:]))  # strictly increasing
    for (a0, b0), (a1, b1) in zip(pairs, pairs[1:]):
        assert a0 < a1 and b0 < b1


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="ACDEFG", min_size=1, max_size=30))
def test_identical_inputs_all_match(a):
    al = align_global(seq(a), seq(a), S)
    assert al.score == len(a)
    assert al.aligned_a == a == al.aligned_b
    assert al.index_map == [(i, i) for i in range(len(a))]


def test_alternative_scoring():
    heavy_gap = Scoring(match=2, mismatch=-1, gap=-3)
    al = align_global(seq("ACGT"), seq("AGT"), heavy_gap)
    assert al.score == best_alignment_score("ACGT", "AGT", 2, -1, -3)


# --- restrict_embedding ---

def test_restrict_selects_matched_rows():
    e = EmbeddingMatrix(np.arange(20.0).reshape(5, 4), "t")
    al = Alignment("ABCDE", "A-C-E", 1)
    out = restrict_embedding(e, al)
    assert out.n_rows == 3
    np.testing.assert_array_equal(out.data, e.data[[0, 2, 4]])
    assert out.source == "t"


def test_restrict_identity():
    e = EmbeddingMatrix(np.random.default_rng(0).normal(size=(4, 3)), "t")
    al = align_global(seq("ACDE"), seq("ACDE"), S)
    np.testing.assert_array_equal(restrict_embedding(e, al).data, e.data)


def test_restrict_dimension_mismatch():
    e = EmbeddingMatrix(np.zeros((4, 4)), "t")
    al = Alignment("ABCDE", "AB-DE", 2)  # a side has 5 residues
    with pytest.raises(DimensionMismatch):
        restrict_embedding(e, al)


def test_restrict_never_reorders():
    rng = np.random.default_rng(3)
    e = EmbeddingMatrix(rng.normal(size=(6, 2)), "t")
    al = align_global(seq("AACGGT"), seq("ACGT"), S)
    rows = [ia for ia, _ in al.index_map]
    assert rows == sorted(rows)
    out = restrict_embedding(e, al)
    np.testing.assert_array_equal(out.data, e.data[rows])
