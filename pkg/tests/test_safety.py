import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semihorse.errors import DomainError, ResourceError
from semihorse.safety import (SafetySet, _minimize, _minimize_moore, code_image, code_preimage,
                              equals, explore, includes, intersect, is_empty, is_universal,
                              lex_least, member_at, shift_image, shift_preimage, shortest_rejected,
                              suffix_membership, union)
from semihorse.subshift import golden_mean
from semihorse.symcore import Alphabet, BlockCode, Cylinder, UPPoint
from strategies import random_table, safety_sets

A2 = Alphabet.range(2)
DEPTH = 6


# -- brute-force oracle: languages of raw product tables -------------------------

def raw_runs(rows, word, q=0):
    for a in word:
        if q < 0:
            return -1
        q = rows[q][a]
    return q


def lang(sets, n, k):
    """Words of length n that extend to a common infinite path in every table.

    Tables are the canonical rows of each set; a common extension of length
    prod(sizes) forces a cycle in the product, hence an infinite path.
    """
    ext = int(np.prod([max(len(s.delta), 1) for s in sets]))
    out = set()
    for w in itertools.product(range(k), repeat=n):
        if any(s.is_empty() for s in sets):
            break
        states = [raw_runs(s.delta, w, s.start) for s in sets]
        if min(states) < 0:
            continue
        if _extends(sets, states, ext, k):
            out.add(w)
    return out


def _extends(sets, states, depth, k):
    frontier = {tuple(states)}
    for _ in range(depth):
        frontier = {tuple(s.delta[q][a] for s, q in zip(sets, qs))
                    for qs in frontier for a in range(k)}
        frontier = {qs for qs in frontier if min(qs) >= 0}
        if not frontier:
            return False
    return True


def words_of(s, n):
    return set(s.words(n))


# -- canonical form --------------------------------------------------------------

@pytest.mark.parametrize("seed", range(40))
def test_hopcroft_matches_moore(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(1, 40)), int(rng.integers(1, 4))
    t = random_table(rng, n, k)
    c1, _ = _minimize(t)
    c2, _ = _minimize_moore(t)
    # same partition: class labels biject
    pairs = set(zip(c1.tolist(), c2.tolist()))
    assert len(pairs) == len(set(c1.tolist())) == len(set(c2.tolist()))


@given(safety_sets(), safety_sets())
def test_equality_is_language_equality(a, b):
    if a.alphabet != b.alphabet:
        return
    same = all(words_of(a, n) == words_of(b, n)
               for n in range(max(a.n_states, 1) * max(b.n_states, 1) + 1))
    assert equals(a, b) == same


@given(safety_sets())
def test_words_prefix_closed_and_extendable(a):
    k = a.alphabet.size
    for n in range(1, DEPTH):
        ws = words_of(a, n)
        assert {w[:-1] for w in ws} == words_of(a, n - 1) or not ws
        assert ws == lang([a], n, k)
        assert a.count(n) == len(ws)


# -- algebra vs oracle ---------------------------------------------------------

@given(safety_sets(max_letters=2), safety_sets(max_letters=2))
def test_intersect_oracle(a, b):
    if a.alphabet != b.alphabet:
        return
    c = intersect(a, b)
    for n in range(DEPTH):
        assert words_of(c, n) == lang([a, b], n, a.alphabet.size)


@given(safety_sets(max_letters=2), safety_sets(max_letters=2))
def test_union_oracle(a, b):
    if a.alphabet != b.alphabet:
        return
    c = union(a, b)
    for n in range(DEPTH):
        assert words_of(c, n) == words_of(a, n) | words_of(b, n)


@given(safety_sets(), st.integers(0, 3))
def test_shift_image_oracle(a, q):
    k = a.alphabet.size
    c = shift_image(a, q)
    for n in range(DEPTH):
        expected = {w[q:] for w in words_of(a, n + q)}
        assert words_of(c, n) == expected


@given(safety_sets(), st.integers(0, 3))
def test_shift_preimage_oracle(a, q):
    k = a.alphabet.size
    c = shift_preimage(a, q)
    for n in range(DEPTH):
        if a.is_empty():
            expected = set()
        elif n <= q:
            expected = set(itertools.product(range(k), repeat=n))
        else:
            tails = words_of(a, n - q)
            expected = {w for w in itertools.product(range(k), repeat=n) if w[q:] in tails}
        assert words_of(c, n) == expected


@st.composite
def small_codes(draw, k):
    w = draw(st.integers(1, 2))
    table = draw(st.lists(st.integers(0, 1), min_size=k ** w, max_size=k ** w))
    return BlockCode(Alphabet.range(k), A2, w, tuple(table))


@given(safety_sets(max_letters=2), st.data())
def test_code_image_oracle(a, data):
    code = data.draw(small_codes(a.alphabet.size))
    c = code_image(a, code)
    for n in range(DEPTH):
        expected = {tuple(code.local(u[i:i + code.window]) for i in range(n))
                    for u in words_of(a, n + code.window - 1)}
        assert words_of(c, n) == expected


@given(safety_sets(max_letters=2), st.data())
def test_code_preimage_roundtrip(a, data):
    k = a.alphabet.size
    code = data.draw(small_codes(k))
    if a.alphabet != A2:
        return
    pre = code_preimage(a, code)
    # every point of the preimage maps into a, checked on ultimately periodic samples
    for n in range(1, 5):
        for cyc in pre.words(n):
            x = UPPoint(Alphabet.range(k), (), cyc)
            if pre.contains(x):
                assert a.contains(code.apply(x))
    # the image of the preimage sits inside a
    assert includes(a, code_image(pre, code))


# -- named examples -----------------------------------------------------------

def test_universality_examples():
    assert is_universal(SafetySet.full(A2))
    assert not is_universal(golden_mean().safety)
    assert is_empty(SafetySet.empty(A2))


def test_shift_image_of_cylinder():
    c01 = SafetySet.cylinder(Cylinder.parse(A2, "01"))
    assert shift_image(c01, 1) == SafetySet.cylinder(Cylinder.parse(A2, "1"))


def test_alphabet_mismatch():
    with pytest.raises(DomainError):
        intersect(SafetySet.full(A2), SafetySet.full(Alphabet.range(3)))


def test_lex_least_and_shortest_rejected():
    g = golden_mean().safety
    assert str(lex_least(g)) == "(0)"
    assert lex_least(SafetySet.empty(A2)) is None
    assert shortest_rejected(g) == (1, 1)
    assert shortest_rejected(SafetySet.full(A2)) is None


@given(safety_sets(max_letters=2), st.lists(st.integers(0, 1), max_size=4),
       st.lists(st.integers(0, 1), min_size=1, max_size=3))
def test_suffix_membership(a, pre, cyc):
    if a.alphabet != A2:
        return
    x = UPPoint(A2, tuple(pre), tuple(cyc))
    for n in range(12):
        assert member_at(a, x, n) == a.contains(x.shift(n))


def test_singleton_and_block_pattern():
    x = UPPoint.parse(A2, "1(01)")
    s = SafetySet.singleton(x)
    assert lex_least(s) == x and s.count(7) == 1
    bp = SafetySet.block_pattern(A2, [[(0, 1), (1, 1)]])
    assert bp.count(4) == 4


def test_resource_ceiling():
    with pytest.raises(ResourceError):
        explore(A2, 0, lambda q, a: q + 1, limit=50)
