import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semihorse.errors import DomainError, StructuredFailure
from semihorse.horseshoe import (BINARY, BlockHorseshoe, ExtractionParams, horseshoe_in_cylinder,
                                 overlap_free_test, semi_horseshoe_extract_sft, step_disjointness,
                                 verify_semi_horseshoe, xi_M)
from semihorse.safety import SafetySet, includes
from semihorse.subshift import full_shift, golden_mean, sft
from semihorse.symcore import Alphabet, BlockCode, Cylinder, UPPoint
from oracles import periodic_block_overlaps


@pytest.mark.parametrize("M", [1] + list(range(3, 13)))
def test_xi_family_free(M):
    h = xi_M(M)
    assert h.certificate.free and h.certificate.revalidate(h.lam)
    assert h.N == M
    if M <= 6:
        assert not periodic_block_overlaps(h.blocks, M)


def test_xi_blocks():
    assert xi_M(3).blocks == ((0, 0, 1), (0, 1, 1))
    assert xi_M(1).blocks == ((0,), (1,))
    assert xi_M(1).lam.is_universal()


def test_xi_two_rejected():
    with pytest.raises(StructuredFailure) as e:
        xi_M(2)
    assert e.value.to_dict()["detail"]["certificate"]["verdict"] == "overlap"
    for bad in (0, -3):
        with pytest.raises(DomainError):
            xi_M(bad)


def test_overlap_examples():
    assert overlap_free_test([(0, 0, 1), (0, 1, 1)], 3).free
    c = overlap_free_test([(0, 1), (1, 0)], 2)
    assert c.verdict == "overlap" and c.shift == 1
    assert c.revalidate(SafetySet.block_pattern(BINARY, [[(0, 1), (1, 0)]]))
    assert c.x.shift(1) == c.z
    assert overlap_free_test([(0,)], 1).free
    with pytest.raises(DomainError):
        overlap_free_test([(0, 1), (1,)], 2)


@st.composite
def block_pairs(draw):
    N = draw(st.integers(2, 5))
    words = st.tuples(*[st.integers(0, 1)] * N)
    a = draw(words)
    b = draw(words.filter(lambda w: w != a))
    return N, [a, b]


@given(block_pairs())
def test_overlap_test_vs_periodic_oracle(case):
    N, blocks = case
    cert = overlap_free_test(blocks, N)
    lam = SafetySet.block_pattern(BINARY, [blocks])
    assert cert.revalidate(lam)
    hits = periodic_block_overlaps(blocks, N)
    if hits:
        assert not cert.free
    if not cert.free:
        # overlaps of closed block sets always show up on periodic points
        assert periodic_block_overlaps(blocks, N, max_period=6)


@pytest.mark.parametrize("prefix", ["0", "1", "01", "110", "1011"])
def test_horseshoe_in_cylinder(prefix):
    C = Cylinder.parse(BINARY, prefix)
    h = horseshoe_in_cylinder(C)
    assert h.certificate.free and h.certificate.revalidate(h.lam)
    assert includes(SafetySet.cylinder(C), h.lam)
    assert all(b[:len(prefix)] == C.prefix for b in h.blocks)
    assert not periodic_block_overlaps(h.blocks, h.N, max_period=3)


def test_horseshoe_in_cylinder_four_blocks():
    h = horseshoe_in_cylinder(Cylinder.parse(BINARY, "1"), n_blocks=4)
    assert len(h.blocks) == 4 and h.certificate.free


def test_cylinder_requires_prefix():
    with pytest.raises(DomainError):
        Cylinder(BINARY, ())
    with pytest.raises(DomainError):
        horseshoe_in_cylinder(Cylinder.parse(BINARY, "0"), n_blocks=3)


def test_block_horseshoe_validation():
    with pytest.raises(DomainError):
        BlockHorseshoe(BINARY, 2, ((0, 1), (0, 1)))
    with pytest.raises(DomainError):
        BlockHorseshoe(BINARY, 2, ((0, 1), (1, 1), (1, 0)))


def test_block_point_and_factor():
    h = xi_M(3)
    u = UPPoint.parse(BINARY, "1(01)")
    x = h.point(u)
    assert h.lam.contains(x) and h.factor.apply(x) == u
    assert h.admissible_in(full_shift(2))
    assert not h.admissible_in(sft(BINARY, ["11"]))


# -- verification -------------------------------------------------------------

def test_verify_xi3():
    h = xi_M(3)
    cert = verify_semi_horseshoe(h.lam, h.factor, 3, 6)
    assert cert.passed and cert.equivariance_mode == "exhaustive"
    assert cert.image_count == cert.target_count == 2 ** 6


def test_verify_fails_surjectivity():
    lam = SafetySet.singleton(UPPoint.parse(BINARY, "(0)"))
    cert = verify_semi_horseshoe(lam, BlockCode.identity(BINARY), 1, 4)
    assert not cert.surjective and not cert.passed


class Scrambled:
    """Identity rule whose point map flips the first letter of points starting with 1."""

    source = target = BINARY
    window = step = 1

    def local(self, block):
        return block[0]

    def apply(self, x):
        if x.at(0) == 1:
            tail = x.shift(1)
            return UPPoint(BINARY, (0,) + tail.preperiod, tail.cycle)
        return x


def test_verify_fails_equivariance():
    cert = verify_semi_horseshoe(SafetySet.full(BINARY), Scrambled(), 1, 2)
    assert cert.surjective and not cert.equivariant and not cert.passed


def test_verify_fails_invariance():
    lam = SafetySet.with_prefix(BINARY, (0, 1))
    cert = verify_semi_horseshoe(lam, BlockCode.identity(BINARY), 1, 3)
    assert not cert.invariant


def test_step_disjointness_range():
    with pytest.raises(DomainError):
        step_disjointness(SafetySet.full(BINARY), 3, [3])


# -- extraction -----------------------------------------------------------------

@pytest.fixture(scope="module", params=[(full_shift(2), 0.5), (golden_mean(), 0.3)],
                ids=["full2", "golden"])
def extraction(request):
    x, eta = request.param
    return x, eta, semi_horseshoe_extract_sft(x, ExtractionParams(eta))


def test_extraction_certificates(extraction):
    x, eta, r = extraction
    assert r.factor.log_m - r.k * eta > 1e-12
    assert r.rate > eta
    assert r.verification.passed and r.verification.depth == 8
    assert r.certificate.free and r.certificate.max_shift == r.k - 1
    assert includes(x.safety, r.lam)


def test_extraction_factor_on_random_blocks(extraction):
    x, _, r = extraction
    f = r.factor
    rng = np.random.default_rng(0)
    for _ in range(5):
        p = int(rng.integers(1, 4))
        blocks = [f.marker + sum((f.segments[int(rng.integers(len(f.segments)))]
                                  for _ in range(f.p)), ()) for _ in range(p)]
        pt = UPPoint(x.alphabet, (), sum(blocks, ()))
        assert r.lam.contains(pt) and x.safety.contains(pt)
        assert f.apply(pt.shift(r.k)) == f.apply(pt).shift(f.outputs_per_block)


def test_extraction_rejects_high_target():
    with pytest.raises(DomainError):
        semi_horseshoe_extract_sft(golden_mean(), ExtractionParams(0.49))
    with pytest.raises(DomainError):
        semi_horseshoe_extract_sft(sft(BINARY, ["00", "11"]), ExtractionParams(0.1))


def test_extraction_params_validation():
    with pytest.raises(DomainError):
        ExtractionParams(0.0)
    with pytest.raises(DomainError):
        ExtractionParams(0.3, l_min=5, l_max=4)


def test_extraction_bounded_failure():
    with pytest.raises(StructuredFailure) as e:
        semi_horseshoe_extract_sft(full_shift(2), ExtractionParams(0.69, l_max=5, p_max=3))
    assert "best" in e.value.to_dict()["detail"] or e.value.to_dict()["detail"]
