import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from semihorse.errors import DomainError
from semihorse.symcore import (Alphabet, BlockCode, Cylinder, UPPoint, Word, agree,
                               apply_block_code, bowen_distance, concat, grid, grid_index,
                               occurrences, power, shift_distance)
from strategies import points

A2 = Alphabet.range(2)
A4 = Alphabet.range(4)


def P(text, A=A2):
    return UPPoint.parse(A, text)


@pytest.mark.parametrize("x, y, expected", [
    ("01(0)", "01(1)", math.exp(-2)),
    ("(01)", "(01)", 0.0),
    ("1(0)", "(0)", 1.0),
    ("0101(01)", "(01)", 0.0),
])
def test_shift_distance_examples(x, y, expected):
    assert shift_distance(P(x), P(y)) == pytest.approx(expected, abs=0, rel=1e-15)


def test_distance_alphabet_mismatch():
    with pytest.raises(DomainError):
        shift_distance(P("(0)"), UPPoint.parse(Alphabet.range(3), "(0)"))


def test_canonical_form_is_structural():
    assert P("0101(01)") == P("(01)")
    assert P("1(0101)") == P("(10)")
    assert str(P("00(00)")) == "(0)"


@pytest.mark.parametrize("k", range(6))
def test_grid_roundtrip(k):
    assert grid_index(grid(k)) == k


def test_grid_floors_off_grid_values():
    assert grid_index(0.9) == 0
    assert grid_index(0.3) == 1
    assert grid_index(2.0) == -1
    with pytest.raises(DomainError):
        grid_index(0.0)


@given(points(), points(), points())
def test_ultrametric(x, y, z):
    assert shift_distance(x, z) <= max(shift_distance(x, y), shift_distance(y, z))


@given(points(), points(), st.integers(0, 8))
def test_metric_coordinate_bridge(x, y, k):
    assert (shift_distance(x, y) < grid(k)) == agree(x, y, 0, k + 1)


@pytest.mark.parametrize("n, k", list(itertools.product(range(1, 9), range(0, 9))))
def test_bowen_bridge_brute_force(n, k):
    # d_n < e^{-k} iff agreement on 0..n+k-1; every first-difference index is tried
    base = P("(0)")
    for i in range(n + k + 2):
        y = UPPoint(A2, (0,) * i + (1,), (0,))
        assert (bowen_distance(base, y, n) < grid(k)) == (i >= n + k)


@given(points(), points(), st.integers(1, 6), st.integers(0, 6))
def test_bowen_bridge_random(x, y, n, k):
    assert (bowen_distance(x, y, n) < grid(k)) == agree(x, y, 0, n + k)


def test_apply_block_code_examples():
    assert apply_block_code(BlockCode.identity(A2), P("(01)")) == P("(01)")
    pi = BlockCode.from_function(A4, A2, 1, lambda b: b[0] // 2)
    assert pi.apply(P("(0123)", A4)) == P("(0011)")
    tgt = Alphabet.of("abcd")
    A3 = Alphabet.range(3)
    named = {"00": "a", "01": "b", "10": "c", "02": "d"}
    mapping = {"".join(map(str, b)): named.get("".join(map(str, b)), "a")
               for b in itertools.product(range(3), repeat=2)}
    code = BlockCode.from_mapping(A3, tgt, mapping, step=2)
    assert str(code.apply(P("(0002)", A3))) == "(ad)"


@st.composite
def codes(draw):
    w = draw(st.integers(1, 3))
    table = draw(st.lists(st.integers(0, 2), min_size=2 ** w, max_size=2 ** w))
    return BlockCode(A2, Alphabet.range(3), w, tuple(table))


@given(codes(), points())
def test_equivariance(code, x):
    assert code.apply(x.shift()) == code.apply(x).shift()


@given(codes(), points())
def test_image_matches_coordinates(code, x):
    y = code.apply(x)
    for i in range(12):
        assert y.at(i) == code.local(x.window(i, code.window))


def test_block_code_rejects_partial_rule():
    with pytest.raises(DomainError):
        BlockCode.from_mapping(A2, A2, {"0": "0"})
    with pytest.raises(DomainError):
        BlockCode(A2, A2, 1, (0,))


def test_word_algebra():
    w = Word.parse(A2, "01")
    assert str(power(w, 3)) == "010101"
    assert str(power(w, 0)) == ""
    assert occurrences(Word.parse(A2, "11"), Word.parse(A2, "0110111")) == 3
    assert Word.parse(A2, "0110111").occurrences(Word.parse(A2, "11")) == [1, 4, 5]
    abc = Alphabet.of("abc")
    assert str(concat(Word(abc), Word.parse(abc, "abc"))) == "abc"
    with pytest.raises(DomainError):
        w.slice(0, 5)


@given(st.lists(st.integers(0, 1), max_size=12), st.lists(st.integers(0, 1), min_size=1, max_size=3))
def test_occurrences_overlapping(v, u):
    V, U = Word(A2, tuple(v)), Word(A2, tuple(u))
    expected = sum(tuple(v[i:i + len(u)]) == tuple(u) for i in range(len(v) - len(u) + 1))
    assert occurrences(U, V) == expected


def test_cylinder():
    c = Cylinder.parse(A2, "01")
    assert c.contains(P("01(1)"))
    assert not c.contains(P("(1)"))
    with pytest.raises(DomainError):
        Cylinder(A2, ())


@given(points())
def test_serialization_roundtrip(x):
    assert P(str(x)) == x


@given(points(), st.integers(0, 10))
def test_shift_coordinates(x, n):
    assert all(x.shift(n).at(i) == x.at(i + n) for i in range(10))
