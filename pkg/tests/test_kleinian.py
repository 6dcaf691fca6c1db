"""Words, matrix groups and the shipped fixtures."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carrierforge.hyp3 import GeometryError, Isometry, IsometryKind, classify
from carrierforge.kleinian import (
    EMPTY,
    MAX_WORD_LENGTH,
    GroupElement,
    GroupPresentation,
    Word,
    WordError,
    conjugate,
    eval_word,
    figure_eight,
    is_identity,
    reduce_word,
    reduced_words,
    schottky,
    substitute,
    swap_matrix,
)

signed = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=12)
words = signed.map(Word.from_signed)


def test_signed_round_trip():
    w = Word.from_signed([1, -2, 2, 1])
    assert w.to_signed() == [1, -2, 2, 1]
    assert w.letters == ((0, 1), (1, -1), (1, 1), (0, 1))
    with pytest.raises(WordError):
        Word.from_signed([0])


def test_reduce_examples():
    assert reduce_word(Word.from_signed([1, -1])) == EMPTY
    assert reduce_word(Word.from_signed([1, 2, -2, 1])).to_signed() == [1, 1]


@given(words)
def test_reduce_properties(w):
    r = reduce_word(w)
    assert r.is_reduced
    assert reduce_word(r) == r
    assert len(r) <= len(w)
    assert reduce_word(Word(w.letters + w.inverse().letters)) == EMPTY


def test_reduced_words_counts():
    # 1 + 4 + 4*3 + 4*9 reduced words in F2 up to length 3
    ws = reduced_words(2, 3)
    assert len(ws) == 1 + 4 + 12 + 36
    assert len(set(ws)) == len(ws)
    assert all(w.is_reduced for w in ws)


def test_format():
    assert Word.from_signed([1, -2]).format(("a", "b")) == "aB"
    assert EMPTY.format() == "1"


def test_substitute():
    # a -> ab, b -> b: aB -> abB -> a
    assert substitute(Word.from_signed([1, -2]), [Word.from_signed([1, 2]), Word.from_signed([2])]).to_signed() == [1]


def test_eval_examples():
    G = schottky()
    assert is_identity(eval_word(G, EMPTY))
    assert eval_word(G, Word.from_signed([2])).matrix.distance_to(G.generators[1]) == 0.0
    with pytest.raises(WordError):
        eval_word(G, Word.from_signed([3]))


def test_eval_is_ordered_product():
    G = schottky()
    w = Word.from_signed([1, -2, -2, 1, 2])
    m = np.eye(2, dtype=complex)
    for s in w.to_signed():
        g = G.generators[abs(s) - 1].to_array()
        m = m @ (g if s > 0 else np.linalg.inv(g))
    assert eval_word(G, w).matrix.close_to(Isometry.from_array(m))


@given(words, words)
def test_eval_homomorphism(w1, w2):
    G = figure_eight()
    lhs = eval_word(G, Word(w1.letters + w2.letters)).matrix
    rhs = eval_word(G, w1).matrix @ eval_word(G, w2).matrix
    assert lhs.close_to(rhs)


def test_figure_eight_relator():
    G = figure_eight()
    (r,) = G.relators
    assert is_identity(eval_word(G, r))
    # w b w^-1 = a with w = b^-1 a b a^-1
    w = G.element([-2, 1, 2, -1])
    lhs = w * G.element([2]) * w.inverse()
    assert lhs.close_to(G.element([1]))
    assert G.cusp_note


def test_stated_variant_of_relator_is_not_identity():
    # w a w^-1 b^-1 with the same w does not hold in this representation
    G = figure_eight()
    w = Word.from_signed([-2, 1, 2, -1])
    bad = Word(w.letters + ((0, 1),) + w.inverse().letters + ((1, -1),))
    assert not is_identity(eval_word(G, bad))


def test_relator_check_rejects_non_relators():
    a = Isometry(1, 1, 0, 1)
    with pytest.raises(GeometryError):
        GroupPresentation((a,), ("a",), (Word.from_signed([1]),))


def test_is_identity():
    assert is_identity(Isometry.identity())
    assert is_identity(Isometry(-1, 0, 0, -1))
    assert not is_identity(Isometry(1, 1, 0, 1))


def test_conjugate_examples():
    G = schottky()
    g, h = G.element([1, 2]), G.element([-2, 1])
    assert conjugate(g, G.identity()).close_to(g)
    assert is_identity(conjugate(G.identity(), h))
    c = conjugate(g, h)
    assert c.word.to_signed() == [-2, 1, 1, 2, -1, 2]
    assert abs(abs(c.matrix.trace) - abs(g.matrix.trace)) <= 1e-10


short_words = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=3).map(Word.from_signed)


@given(short_words, short_words)
def test_trace_conjugation_invariant(w1, w2):
    G = schottky()
    g, h = eval_word(G, w1), eval_word(G, w2)
    tg, tc = g.matrix.trace, conjugate(g, h).matrix.trace
    # PSL(2, C): traces agree up to sign
    assert min(abs(tc - tg), abs(tc + tg)) <= 1e-10 * max(1.0, abs(tg))


def test_word_cap():
    long = Word(((0, 1),) * (MAX_WORD_LENGTH + 1))
    with pytest.raises(WordError):
        GroupElement(long, Isometry.identity())


def test_schottky_fixture():
    G = schottky()
    a, b = G.generators
    assert not G.relators and not G.cusp_note
    for g in (a, b):
        c = classify(g)
        assert c.kind is IsometryKind.LOXODROMIC
        assert abs(c.translation_length - 2 * math.acosh(2)) <= 1e-12
    n = swap_matrix()
    assert (n @ a @ n.inverse()).close_to(b)
    assert (n @ b @ n.inverse()).close_to(a)


def test_schottky_ping_pong():
    G = schottky()
    for w in reduced_words(2, 6)[1:]:
        assert not is_identity(eval_word(G, w))
    # isometric circles |cz + d| = 1 of the generators and inverses are disjoint
    circles = []
    for g in G.generators:
        for m in (g, g.inverse()):
            circles.append((-m.d / m.c, 1 / abs(m.c)))
    for i in range(4):
        for j in range(i + 1, 4):
            (c1, r1), (c2, r2) = circles[i], circles[j]
            assert abs(c1 - c2) > r1 + r2
