import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semihorse.bohr import (ObservableSpec, Weight, champernowne, correlation_average,
                            end_to_end_bohr_witness, lemma_a_point, lift_correlated_point,
                            lift_point, nontriviality_statistic, subsample_weight)
from semihorse.errors import DomainError, LiftError
from semihorse.horseshoe import BINARY, xi_M
from semihorse.prune import corpus
from semihorse.safety import SafetySet
from semihorse.subshift import golden_mean
from semihorse.symcore import Alphabet, BlockCode, UPPoint, Word

WEIGHTS = [Weight.alternating(), Weight.random_sign(7), Weight.periodic((1, 0, -1)),
           Weight.parse("mobius-like:seed=3"), Weight.explicit([1, -0.5, 2])]


# -- weights ------------------------------------------------------------------

@pytest.mark.parametrize("spec", ["explicit:[1.0, -0.5]", "periodic:1,0,-1", "random-sign:seed=7",
                                  "mobius-like:seed=3", "harmonic", "zero"])
def test_weight_spec_roundtrip(spec):
    w = Weight.parse(spec)
    assert Weight.parse(w.spec()) == w


@pytest.mark.parametrize("bad", ["periodic:", "random-sign:7", "explicit:[1,", "nope", "zero:1"])
def test_weight_parse_errors(bad):
    with pytest.raises(DomainError):
        Weight.parse(bad)


def test_weight_values():
    assert Weight.explicit([1, 2]).values(4).tolist() == [1, 2, 0, 0]
    assert Weight.alternating().values(5).tolist() == [1, -1, 1, -1, 1]
    assert Weight.parse("harmonic").values(3).tolist() == [1, 0.5, 1 / 3]
    v = Weight.random_sign(7).values(9000)
    assert set(np.unique(v)) == {-1.0, 1.0}
    # prefixes are stable across horizons
    assert np.array_equal(Weight.random_sign(7).values(5000), v[:5000])
    mob = Weight.parse("mobius-like:seed=1").values(30)
    assert all((mob[n] == 0) == any((n + 1) % (p * p) == 0 for p in (2, 3, 5)) for n in range(30))


def test_nontriviality_examples():
    assert nontriviality_statistic(Weight.alternating(), 100).value == 1.0
    h = nontriviality_statistic(Weight.parse("harmonic"), 10 ** 4)
    expected = math.fsum(1 / n for n in range(1, 10 ** 4 + 1)) / 10 ** 4
    assert h.value == pytest.approx(9.7876e-4, abs=1e-7) and h.value == pytest.approx(expected, rel=1e-12)
    assert not h.nontrivial
    z = nontriviality_statistic(Weight("zero"), 50)
    assert z.value == 0 and not z.nontrivial
    assert nontriviality_statistic(Weight.random_sign(2), 1000).nontrivial


# -- parity point --------------------------------------------------------------------

@pytest.mark.parametrize("w, m, fc, N, expected", [
    (Weight.alternating(), 2, [0] * 6, 6, "010101"),
    (Weight.periodic((-1,)), 2, [1] * 4, 4, "3333"),
    (Weight.explicit([1, -1, 0]), 3, [0, 2, 1], 3, "052"),
])
def test_lemma_a_examples(w, m, fc, N, expected):
    assert str(lemma_a_point(w, m, N, fc)) == expected


def test_lemma_a_validation():
    with pytest.raises(DomainError):
        lemma_a_point(Weight.alternating(), 2, 4, [0, 1])
    with pytest.raises(DomainError):
        lemma_a_point(Weight.alternating(), 2, 2, [0, 2])


@pytest.mark.parametrize("w", WEIGHTS, ids=lambda w: w.spec())
@pytest.mark.parametrize("m", [2, 3])
def test_lemma_a_equality(w, m):
    N = 10 ** 4
    y = lemma_a_point(w, m, N)
    rep = correlation_average(y, ObservableSpec(m), w, N)
    assert rep.max_abs_diff <= 1e-12 and rep.equal


@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=40), st.integers(2, 4),
       st.data())
def test_lemma_a_equality_random(values, m, data):
    w = Weight.explicit(values)
    N = len(values)
    fc = data.draw(st.lists(st.integers(0, m - 1), min_size=N, max_size=N))
    rep = correlation_average(lemma_a_point(w, m, N, fc), ObservableSpec(m), w, N)
    assert rep.max_abs_diff <= 1e-12


def test_champernowne_covers_words():
    seq = champernowne(2, 2 + 8 + 24 + 64 + 160)
    s = "".join(map(str, seq))
    for L in range(1, 5):
        for w in itertools.product("01", repeat=L):
            assert "".join(w) in s


def test_correlation_examples():
    w0 = Weight("zero")
    rep = correlation_average(Word(Alphabet.range(4), (0,) * 20), ObservableSpec(2), w0, 20)
    assert rep.correlation.max() == 0.0
    w = Weight.random_sign(7)
    N = 10 ** 4
    rep = correlation_average(UPPoint.parse(Alphabet.range(4), "(0)"), ObservableSpec(2), w, N)
    assert rep.correlation[-1] == pytest.approx(abs(w.values(N).sum()) / N, abs=1e-15)
    assert rep.correlation[-1] < 5 / math.sqrt(N)


def test_report_serialization():
    w = Weight.alternating()
    rep = correlation_average(lemma_a_point(w, 2, 50), ObservableSpec(2), w, 50)
    assert json.loads(json.dumps(rep.to_json()))["verdict"] == "equal"
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "N,correlation,reference" and len(lines) == 51


# -- subsampling ----------------------------------------------------------------

def test_subsample_examples():
    tau, varpi, stats = subsample_weight(Weight.periodic((1, 0)), 2, 100)
    assert tau == 0 and varpi.values(5).tolist() == [0, 1, 1, 1, 1]
    tau, _, stats = subsample_weight(Weight.periodic((1, 0, 0)), 3, 100)
    assert tau == 0 and stats[0] == 1.0
    tau, _, stats = subsample_weight(Weight.random_sign(7), 4, 10 ** 4)
    assert tau == 0 and np.allclose(stats, 1.0)


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=30), st.integers(1, 5),
       st.integers(1, 20))
def test_subsample_consistency(values, k, N):
    w = Weight.explicit(values)
    tau, varpi, stats = subsample_weight(w, k, N)
    base = w.values(k * N + k)
    assert stats[tau] == max(stats)
    assert all(stats[t] < stats[tau] for t in range(tau))
    v = varpi.values(N + 1)
    assert v[0] == 0
    assert np.array_equal(v[1:], base[tau::k][:N])


# -- lifting --------------------------------------------------------------------

def test_lift_examples():
    A4 = Alphabet.range(4)
    ident = BlockCode.identity(BINARY)
    assert lift_correlated_point(ident, (0, 1, 1)).letters == (0, 1, 1)
    pair = BlockCode.from_function(A4, BINARY, 1, lambda b: b[0] // 2)
    assert str(lift_correlated_point(pair, (0, 1, 0))) == "020"
    assert lift_correlated_point(pair, ()).letters == ()


def test_lift_into_golden_mean():
    # w=2 rule reading the pair sum; 11 is not available in the golden mean
    code = BlockCode.from_function(BINARY, Alphabet.range(3), 2, lambda b: b[0] + b[1])
    gm = golden_mean().safety
    x = lift_correlated_point(code, (1, 1, 0), gm)
    assert gm.accepts(x.letters) and code.apply_word(x).letters == (1, 1, 0)
    with pytest.raises(LiftError):
        lift_correlated_point(code, (2,), gm)


def test_lift_point_block_index():
    h = xi_M(3)
    y = UPPoint.parse(BINARY, "1(01)")
    x = lift_point(h.factor, y, h.lam)
    assert h.lam.contains(x) and h.factor.apply(x) == y
    with pytest.raises(LiftError):
        lift_point(BlockCode.identity(BINARY), y, SafetySet.singleton(UPPoint.parse(BINARY, "(0)")))


# -- end to end ----------------------------------------------------------------

@pytest.fixture(scope="module")
def witness():
    lam, pi, N = corpus()["identity"]
    return end_to_end_bohr_witness(lam, pi, N, Weight.random_sign(7), 10 ** 4)


def test_witness_correlation(witness):
    rep = witness.report
    assert rep.max_abs_diff <= 1e-12
    assert rep.plateau > 0
    a = np.abs(Weight.random_sign(7).values(10 ** 4))
    mask = np.arange(10 ** 4) % witness.k == witness.tau_star
    assert np.allclose(rep.reference, np.cumsum(a * mask) / np.arange(1, 10 ** 4 + 1), atol=0, rtol=0)


def test_witness_certificate(witness):
    c = witness.entropy_certificate
    assert c["complete"] and c["words_covered"] == 256
    assert c["bound"] == pytest.approx(math.log(2) / witness.k)


def test_transport_identity(witness):
    # phi_hat(sigma^n y) = parity of the factor letter on E, zero elsewhere
    y, k, tau = witness.point, witness.k, witness.tau_star
    obs = witness.observable
    H = 40 * k
    vals = obs.evaluate(y, H)
    w = Weight.random_sign(7)
    for n in range(H):
        if n % k == tau:
            assert vals[n] == (1.0 if w.values(n + 1)[n] >= 0 else -1.0)
        else:
            assert vals[n] == 0.0


def test_witness_json(witness):
    d = json.loads(json.dumps(witness.to_json()))
    assert d["k"] == witness.k and "timings" in d["stages"]


def test_witness_xi3_alternating():
    lam, pi, N = corpus()["xi3"]
    wit = end_to_end_bohr_witness(lam, pi, N, Weight.alternating(), 2000)
    assert wit.report.equal and wit.entropy_certificate["complete"]


def test_witness_rejects_trivial_weight():
    lam, pi, N = corpus()["identity"]
    with pytest.raises(DomainError):
        end_to_end_bohr_witness(lam, pi, N, Weight("zero"), 1000)
    with pytest.raises(DomainError):
        end_to_end_bohr_witness(lam, pi, N, Weight.parse("harmonic"), 1000)
