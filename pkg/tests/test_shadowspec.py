import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semihorse.entropy import MistakeFunction, mistake_ball_membership
from semihorse.errors import DomainError
from semihorse.safety import SafetySet
from semihorse.shadowspec import (PseudoOrbit, SpecQuery, alternating_pattern, break_seam,
                                  composite_tracing_check, counterexample_gluing,
                                  counterexample_suite, even_aligned_control, glue,
                                  min_mistake_exhaustive, min_mistake_profile, min_trace_m,
                                  modified_almost_spec_check, random_point_from,
                                  random_pseudo_orbit, trace_sft, weak_spec_pattern_search)
from semihorse.subshift import (counterexample_e, counterexample_x, full_shift, golden_mean, sft,
                                sft_order_test)
from semihorse.symcore import Alphabet, UPPoint, grid, shift_distance

A2 = Alphabet.range(2)
A3 = Alphabet.range(3)


def P(text, A=A2):
    return UPPoint.parse(A, text)


# -- pseudo-orbits and tracing --------------------------------------------------

def test_pseudo_orbit_validation():
    x = P("(01)")
    PseudoOrbit((x, x.shift(1), x.shift(2)), None)
    with pytest.raises(DomainError):
        PseudoOrbit((x, x), None)
    with pytest.raises(DomainError):
        PseudoOrbit((), 1)
    po = PseudoOrbit((P("0(0)"), P("0(1)")), 0)
    assert po.tightest_m() == 0 and po.delta == 1.0


def test_exact_orbit_traced_by_itself():
    x = P("1(001)")
    po = PseudoOrbit(tuple(x.shift(i) for i in range(6)), None)
    r = trace_sft(golden_mean(), po)
    assert r.z == x and r.eps_out == 0 and max(r.distances) == 0 and r.recheck(po)


def test_glued_segments_golden_mean():
    # orbit of (10), then jump onto the orbit of 10(100) after agreeing on 101
    a, b = P("(10)"), P("10(100)")
    pts = (a, a.shift(1), b, b.shift(1), b.shift(2))
    po = PseudoOrbit(pts, 2)
    r = trace_sft(golden_mean(), po)
    assert r.recheck(po) and all(d < grid(1) for d in r.distances)
    assert golden_mean().safety.contains(r.z)


def test_bad_seam_rejected():
    po = PseudoOrbit((P("(10)"), P("(01)")), 3)
    bad = break_seam(po, 0, 1)
    with pytest.raises(DomainError):
        PseudoOrbit(bad, 3)


def test_coarse_delta_rejected():
    x = sft(A2, ["0110"])
    assert min_trace_m(4) == 2
    po = PseudoOrbit((P("(0)"), P("(0)")), 0)
    with pytest.raises(DomainError):
        trace_sft(x, po)


@given(st.integers(0, 2 ** 31), st.integers(1, 12), st.integers(0, 5))
def test_random_pseudo_orbits_trace(seed, length, m):
    rng = np.random.default_rng(seed)
    x = golden_mean()
    po = random_pseudo_orbit(x, length, m, rng)
    r = trace_sft(x, po)
    assert r.recheck(po) and x.safety.contains(r.z)
    assert all(d < grid(m + 1) or d == 0 for d in r.distances) or all(d < r.eps_out for d in r.distances)


@st.composite
def sfts(draw):
    forb = draw(st.lists(st.lists(st.integers(0, 1), min_size=2, max_size=3), min_size=1, max_size=3))
    try:
        return sft(A2, [tuple(f) for f in forb])
    except DomainError:
        return golden_mean()


@given(sfts(), st.integers(0, 2 ** 31), st.integers(0, 4))
def test_tracing_soundness_random_sft(x, seed, extra):
    r = x.order
    m = min_trace_m(r) + extra
    po = random_pseudo_orbit(x, 8, m, np.random.default_rng(seed))
    res = trace_sft(x, po)
    assert res.recheck(po)


@given(sfts(), st.integers(0, 2 ** 31), st.integers(0, 6), st.integers(0, 3))
def test_gluing_soundness(x, seed, k, extra):
    # points agreeing on a window of length >= order - 1 glue inside an SFT
    rng = np.random.default_rng(seed)
    s = x.safety
    n = max(x.order - 1, 1) + extra
    u = random_point_from(s, (), k + n + 4, rng)
    v = random_point_from(s, u.prefix(k + n - 1), 6, rng)
    # v starts with u's prefix, so they agree on [k, k+n-2]
    z = glue(u, v, k, n)
    assert s.contains(z)


def test_composite_tracing():
    X = counterexample_x().safety
    po = PseudoOrbit((P("(02)", A3), P("(20)", A3)), None)
    with pytest.raises(DomainError):
        composite_tracing_check(X, 2, po)
    A6 = Alphabet.range(6)
    Y = SafetySet.block_pattern(A6, [[(0, 3), (0, 4), (1, 3), (0, 5)]])
    x0 = UPPoint(A6, (), (0, 3, 1, 3))
    pts = tuple(x0.shift(i) for i in range(5))
    r = composite_tracing_check(Y, 2, PseudoOrbit(pts, None))
    assert r.recheck(PseudoOrbit(pts, None))


def test_composite_reduces_to_trace_for_l1():
    x = golden_mean()
    po = random_pseudo_orbit(x, 6, 2, np.random.default_rng(3))
    a = trace_sft(x, po)
    b = composite_tracing_check(x.safety, 1, po)
    assert a.z == b.z and a.distances == b.distances


# -- counterexample -------------------------------------------------------------

@pytest.mark.parametrize("m", range(1, 11))
def test_counterexample_gluing(m):
    w = counterexample_gluing(m)
    assert w.ok and w.gap == 2 * m + 5 and w.gap % 2 == 1
    assert w.x_in and w.y_in and not w.z_in
    X = counterexample_x().safety
    assert X.contains(w.x) == w.x_in and not X.contains(w.z)
    # the halves agree on the glued window
    n = 2 * m + 3
    assert w.x.window(w.offset, n - 1) == w.y.window(w.offset, n - 1)


def test_gluing_paper_gaps():
    assert counterexample_gluing(1).gap == 7
    assert counterexample_gluing(5).gap == 15


def test_even_aligned_control():
    E = counterexample_e().safety
    X = counterexample_x().safety
    u, v = P("0201(00)", A3), P("(1002)", A3)
    assert E.contains(u) and E.contains(v)
    z = even_aligned_control(u, v, 4)
    assert E.contains(z) and X.contains(z)
    with pytest.raises(DomainError):
        even_aligned_control(u, v, 3)


def test_glue_requires_agreement():
    with pytest.raises(DomainError):
        glue(P("(0)"), P("(1)"), 0, 3)


# -- mistakes -------------------------------------------------------------------

@pytest.mark.parametrize("x, pattern, expected", [
    (full_shift(2), (1, 0, 1, 1), 0),
    (golden_mean(), (1, 1, 1, 1), 2),
])
def test_min_mistake_examples(x, pattern, expected):
    assert min_mistake_profile(x, pattern) == expected


def test_counterexample_mistake_minima():
    X = counterexample_x()
    for n in range(2, 9):
        assert min_mistake_profile(X, alternating_pattern(n)) >= n
    assert min_mistake_exhaustive(X, alternating_pattern(2)) == min_mistake_profile(X, alternating_pattern(2))
    assert min_mistake_profile(X, alternating_pattern(3)) >= 3


@given(st.lists(st.integers(0, 2), min_size=1, max_size=8))
def test_mistake_dp_vs_enumeration(pattern):
    for x in (counterexample_x(), counterexample_e()):
        assert min_mistake_profile(x, pattern) == min_mistake_exhaustive(x, pattern)


# -- specification --------------------------------------------------------------

def test_spec_golden_zero_targets():
    q = SpecQuery((P("(0)"), P("(0)")), 4, grid(0), 1)
    r = modified_almost_spec_check(golden_mean(), q)
    assert r.found and r.word == (0,) * 8 and r.recheck(golden_mean())


def test_spec_full_shift_exact_concatenation():
    targets = (P("(01)"), P("1(0)"), P("(110)"))
    q = SpecQuery(targets, 3, 1.0, 0)
    r = modified_almost_spec_check(full_shift(2), q)
    assert r.found and r.word == sum((t.prefix(3) for t in targets), ())


def test_spec_counterexample_structural():
    X = counterexample_x()
    q = SpecQuery((P("(02)", A3), P("(20)", A3)), 8, grid(0), MistakeFunction("constant", 3))
    r = modified_almost_spec_check(X, q)
    assert not r.found and r.tag == "structural" and r.cross_checked


@given(st.integers(1, 4), st.integers(0, 1), st.integers(0, 2), st.data())
def test_spec_dp_vs_exhaustive(n, k, g, data):
    x = data.draw(st.sampled_from([golden_mean(), counterexample_x(), sft(A2, ["010"])]))
    a = x.alphabet.size
    tg = data.draw(st.lists(st.lists(st.integers(0, a - 1), min_size=1, max_size=3), min_size=1, max_size=3))
    targets = tuple(UPPoint(x.alphabet, (), tuple(c)) for c in tg)
    q = SpecQuery(targets, n, grid(k), g)
    r = modified_almost_spec_check(x, q)
    length = len(targets) * n + k
    brute = any(all(mistake_ball_membership(t.prefix(n + k), w[j * n:j * n + n + k], n, grid(k), g)
                    for j, t in enumerate(targets))
                for w in itertools.product(range(a), repeat=length) if x.safety.accepts(w))
    assert r.found == brute
    if r.found:
        assert r.recheck(x)


def test_spec_query_validation():
    with pytest.raises(DomainError):
        SpecQuery((), 3, 1.0)
    with pytest.raises(DomainError):
        modified_almost_spec_check(golden_mean(), SpecQuery((P("(0)", A3),), 2, 1.0))


# -- weak specification pattern -------------------------------------------------

def test_pattern_examples():
    r = weak_spec_pattern_search(golden_mean(), [(1, 0), (0, 1)], [(0, 1), (3, 4)])
    assert r.found and r.word[:2] == (1, 0) and r.word[3:5] == (0, 1)
    assert golden_mean().safety.accepts(r.word)
    r = weak_spec_pattern_search(golden_mean(), [(1, 1), (0, 0)], [(0, 1), (4, 5)])
    assert not r.found
    r = weak_spec_pattern_search(full_shift(2), [(1, 1), (1, 1)], [(0, 1), (2, 3)])
    assert r.word == (1, 1, 1, 1)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=3), st.lists(st.integers(0, 1), min_size=1, max_size=3),
       st.integers(0, 3))
def test_pattern_search_vs_brute(u, v, gap):
    a1, b1 = 0, len(u) - 1
    a2 = b1 + 1 + gap
    b2 = a2 + len(v) - 1
    r = weak_spec_pattern_search(golden_mean(), [tuple(u), tuple(v)], [(a1, b1), (a2, b2)])
    total = b2 + 1
    sols = [w for w in itertools.product((0, 1), repeat=total)
            if golden_mean().safety.accepts(w) and w[:len(u)] == tuple(u) and w[a2:] == tuple(v)]
    assert r.found == bool(sols)
    if sols:
        assert r.word == min(sols)


def test_pattern_window_validation():
    with pytest.raises(DomainError):
        weak_spec_pattern_search(golden_mean(), [(0,), (0,)], [(0, 2), (1, 3)])


# -- suite ---------------------------------------------------------------------

def test_counterexample_suite():
    s = counterexample_suite(m_max=4, n_max=5, order_range=(3, 6))
    assert s.ok
    assert s.recoding_is_full
    assert not any(s.order_tests.values())
    assert "verdict: ok" in s.to_text()
    assert s.to_csv().startswith("kind,parameter,value,flag")
    assert all(c["found"] is False for c in s.spec_checks)


def test_order_of_counterexample_e_recoding():
    assert not sft_order_test(counterexample_x(), 4)
