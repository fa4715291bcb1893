"""The pruning algorithm: cutting an admissible set until every overlap image is proper.

Setting: a semi-horseshoe ``pi : (Lambda, sigma^N) -> ({0,1}^N, sigma)``.
With ``M = N`` (``M = 4`` when ``N = 2``), ``tau = N M`` and
``rho = theta_M o pi``, the set ``B0 = pi^{-1}(Xi_M)`` is admissible:

* (A1) ``sigma^tau B <= B``;
* (A2) ``rho(B)`` is the full 2-shift.

For ``q`` in ``Q = {1..tau-1}`` minus the multiples of N, the overlap image is
``Y_q(B) = rho(B & sigma^q B)``. While some ``Y_q`` is the whole shift, B is
replaced by ``B & sigma^q B``. When all are proper, a cylinder missed by their
union gives a horseshoe ``Theta`` and the first-return set
``E = rho^{-1}(Theta) & B``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError, InvariantBreach, StructuredFailure
from .horseshoe import (BINARY, BlockHorseshoe, OverlapCertificate, horseshoe_in_cylinder,
                        step_disjointness, verify_semi_horseshoe, xi_M)
from .safety import (LocalRule, SafetySet, code_image, code_preimage, includes, intersect,
                     member_at, shift_image, shortest_rejected, union)
from .symcore import Alphabet, Cylinder, UPPoint, _check_same, slide


@dataclass(frozen=True)
class ComposedCode:
    """The sliding code ``outer o inner`` evaluated lazily (no rule table)."""

    outer: LocalRule
    inner: LocalRule

    def __post_init__(self):
        _check_same(self.inner.target, self.outer.source)

    @property
    def source(self) -> Alphabet:
        return self.inner.source

    @property
    def target(self) -> Alphabet:
        return self.outer.target

    @property
    def window(self) -> int:
        return self.inner.step * (self.outer.window - 1) + self.inner.window

    @property
    def step(self) -> int:
        return self.inner.step * self.outer.step

    def local(self, block: Sequence[int]) -> int:
        s, w = self.inner.step, self.inner.window
        mid = [self.inner.local(block[s * j:s * j + w]) for j in range(self.outer.window)]
        return self.outer.local(mid)

    def apply(self, x: UPPoint) -> UPPoint:
        return slide(self, x)


def m_for(N: int) -> int:
    """``M = N`` unless ``N = 2``, where ``M = 4`` (the family is not step-disjoint for M = 2)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    return 4 if N == 2 else N


def cut_times(N: int, M: int) -> tuple[int, ...]:
    """``Q = {1, ..., NM - 1}`` without the multiples of N."""
    return tuple(q for q in range(1, N * M) if q % N)


def cut_budget(N: int, M: int) -> tuple[dict[int, int], int]:
    """``m_q = N / gcd(N, q mod N)`` for q in Q, and ``sum(m_q - 1)``.

    Examples
    --------
    >>> cut_budget(2, 4)
    ({1: 2, 3: 2, 5: 2, 7: 2}, 4)
    >>> cut_budget(6, 6)[0][4]
    3
    >>> cut_budget(1, 1)
    ({}, 0)
    """
    if N < 1 or M < 1 or M % N:
        raise DomainError("need N >= 1 and N | M")
    budget = {q: N // math.gcd(N, q % N) for q in cut_times(N, M)}
    return budget, sum(m - 1 for m in budget.values())


@dataclass
class PruneInstance:
    """A semi-horseshoe together with the derived pruning data.

    Attributes
    ----------
    lam : SafetySet
        Domain of ``pi``.
    pi : LocalRule
        Factor onto the full 2-shift with ``step == N``.
    N, M, tau : int
    xi : BlockHorseshoe
        The family ``Xi_M`` and its block-index code ``theta_M``.
    rho : ComposedCode
        ``theta_M o pi``; it intertwines ``sigma^tau`` with ``sigma``.
    b0 : SafetySet
        ``pi^{-1}(Xi_M)`` inside ``lam``.
    """

    lam: SafetySet
    pi: LocalRule
    N: int
    M: int
    tau: int
    xi: BlockHorseshoe
    rho: ComposedCode
    b0: SafetySet

    @property
    def Q(self) -> tuple[int, ...]:
        return cut_times(self.N, self.M)

    @property
    def alphabet(self) -> Alphabet:
        return self.lam.alphabet


def build_instance(lam: SafetySet, pi: LocalRule, N: int, *, depth: int = 6) -> PruneInstance:
    """Derive ``M``, ``tau``, ``rho`` and ``B0`` and validate them.

    Raises
    ------
    StructuredFailure
        Naming the first failed check (``stage="instance"``).
    """
    if pi.step != N:
        raise DomainError(f"factor step {pi.step} differs from N = {N}")
    if pi.target != BINARY:
        raise DomainError("factor must map onto the full 2-shift")

    def fail(check: str, **detail):
        raise StructuredFailure(f"instance check failed: {check}", stage="instance",
                                detail={"check": check, **detail})

    ver = verify_semi_horseshoe(lam, pi, N, depth)
    if not ver.passed:
        fail("semi-horseshoe", certificate=ver.to_json())
    M = m_for(N)
    if M % N:
        fail("N divides M")
    xi = xi_M(M)
    rho = ComposedCode(xi.factor, pi)
    b0 = intersect(code_preimage(xi.lam, pi), lam)
    inst = PruneInstance(lam, pi, N, M, N * M, xi, rho, b0)
    if not code_image(b0, rho).is_universal():
        fail("rho(B0) is the full shift")
    cert = step_disjointness(b0, M * N, [N * l for l in range(1, M)])
    if not cert.free:
        fail("B0 disjoint from its sigma^(N l) images", certificate=cert.to_json())
    AdmissibleSet(b0, inst)
    return inst


@dataclass(frozen=True)
class AdmissibleSet:
    """A subset of ``B0`` satisfying (A1) and (A2), checked on construction."""

    set: SafetySet
    instance: PruneInstance = field(repr=False, compare=False)

    def __post_init__(self):
        inst = self.instance
        if not includes(self.set, shift_image(self.set, inst.tau)):
            raise InvariantBreach("(A1) fails: sigma^tau B is not inside B")
        if not code_image(self.set, inst.rho).is_universal():
            raise InvariantBreach("(A2) fails: rho(B) is not the full shift")


def overlap_image(B: AdmissibleSet, q: int) -> SafetySet:
    """``Y_q(B) = rho(B & sigma^q B)``."""
    inst = B.instance
    if q not in inst.Q:
        raise DomainError(f"q = {q} is not in Q = {list(inst.Q)}")
    return code_image(intersect(B.set, shift_image(B.set, q)), inst.rho)


@dataclass
class PruneTrace:
    """Record of a prune run.

    ``sets[i]`` is the set after ``i`` cuts, so ``sets[0] == B0``.
    """

    cuts: list[int]
    budget: dict[int, int]
    total_budget: int
    final_nonuniversal: list[int]
    sets: list[SafetySet] = field(default_factory=list, repr=False)

    @property
    def usage(self) -> dict[int, int]:
        return {q: self.cuts.count(q) for q in self.budget}

    def to_json(self) -> dict:
        return {"cuts": list(self.cuts), "budget": {str(q): m for q, m in self.budget.items()},
                "total_budget": self.total_budget, "final_nonuniversal": list(self.final_nonuniversal)}


def prune(instance: PruneInstance) -> tuple[AdmissibleSet, PruneTrace]:
    """Cut by the smallest q with universal ``Y_q`` until none is universal.

    Every intermediate set is re-validated as admissible, and the number of
    cuts by each q is held to ``m_q - 1``; a violation raises
    :class:`InvariantBreach` because it can only come from a bug.
    """
    budget, total = cut_budget(instance.N, instance.M)
    B = AdmissibleSet(instance.b0, instance)
    cuts: list[int] = []
    sets = [B.set]
    while True:
        universal = [q for q in instance.Q if overlap_image(B, q).is_universal()]
        if not universal:
            break
        q = universal[0]
        cuts.append(q)
        if cuts.count(q) > budget[q] - 1 or len(cuts) > total:
            raise InvariantBreach(f"cut budget exceeded at q = {q}: cuts {cuts}, budget {budget}")
        B = AdmissibleSet(intersect(B.set, shift_image(B.set, q)), instance)
        sets.append(B.set)
    return B, PruneTrace(cuts, budget, total, list(instance.Q), sets)


def subset_sum_check(instance: PruneInstance, trace: PruneTrace) -> bool:
    """``B^(s) <= sigma^(e_1 q_1 + ... + e_s q_s)(B0)`` for every ``e`` in ``{0,1}^s``."""
    final = trace.sets[-1]
    qs = trace.cuts
    for eps in itertools.product((0, 1), repeat=len(qs)):
        t = sum(e * q for e, q in zip(eps, qs))
        if not includes(shift_image(instance.b0, t), final):
            return False
    return True


@dataclass
class FirstReturnResult:
    """A set E whose first return time under the shift is ``period``.

    ``factor`` is the block index of Theta after rho, a factor
    ``(E, sigma^period) -> full shift`` on ``len(theta.blocks)`` symbols.
    """

    E: SafetySet
    period: int
    L: int
    cylinder: tuple[int, ...]
    theta: BlockHorseshoe
    certificate: OverlapCertificate
    periodic_check: dict
    factor: ComposedCode = field(repr=False)

    def to_json(self) -> dict:
        return {"period": self.period, "L": self.L, "cylinder": list(self.cylinder),
                "theta": self.theta.to_json(), "certificate": self.certificate.to_json(),
                "periodic_check": self.periodic_check, "E_states": self.E.n_states}


def periodic_cross_check(E: SafetySet, period: int, max_period: int = 6) -> dict:
    """For every point of E with period at most ``max_period``, test ``sigma^i x`` for ``1 <= i < period``."""
    checked = 0
    for n in range(1, max_period + 1):
        for w in E.words(n):
            x = UPPoint(E.alphabet, (), w)
            if len(x.cycle) != n or not E.contains(x):
                continue
            checked += 1
            for i in range(1, period):
                if member_at(E, x, i):
                    return {"ok": False, "points": checked, "witness": str(x), "shift": i}
    return {"ok": True, "points": checked, "max_period": max_period}


def first_return_horseshoe(B: AdmissibleSet, *, n_blocks: int = 2,
                           prefix_bound: int = 16) -> FirstReturnResult:
    """Extract E from a pruned set with ``E & sigma^i E`` empty for ``1 <= i < tau L``.

    Raises
    ------
    StructuredFailure
        ``stage="cylinder"`` if no cylinder of length at most
        ``prefix_bound`` avoids every ``Y_q``; ``stage="first-return"`` with
        an overlap witness if the emptiness check fails.
    """
    inst = B.instance
    Y = SafetySet.empty(BINARY)
    for q in inst.Q:
        Y = union(Y, overlap_image(B, q))
    c = shortest_rejected(Y)
    if c is None:
        raise StructuredFailure("union of overlap images is the full shift", stage="cylinder")
    if not c:
        c = (0,)
    if len(c) > prefix_bound:
        raise StructuredFailure(f"no avoided cylinder up to length {prefix_bound}", stage="cylinder",
                                detail={"shortest": list(c)})
    theta = horseshoe_in_cylinder(Cylinder(BINARY, c), n_blocks)
    L = theta.N
    E = intersect(code_preimage(theta.lam, inst.rho), B.set)
    period = inst.tau * L
    cert = step_disjointness(E, period)
    if not cert.free:
        raise StructuredFailure("E meets one of its shifts", stage="first-return",
                                detail={"certificate": cert.to_json()})
    check = periodic_cross_check(E, period)
    if not check["ok"]:
        raise StructuredFailure("periodic cross-check failed", stage="first-return", detail=check)
    return FirstReturnResult(E, period, L, c, theta, cert, check, ComposedCode(theta.factor, inst.rho))


# ---------------------------------------------------------------------------
# test corpus


def corpus() -> dict[str, tuple[SafetySet, LocalRule, int]]:
    """Small semi-horseshoes exercising the loop.

    * ``identity``: full 2-shift, identity, N = 1;
    * ``xi3``: ``Xi_3`` with its block index, N = 3;
    * ``even-full``: full 2-shift, ``pi(x)_i = x_{2i}``, N = 2 (needs one cut);
    * ``even-golden``: golden mean, ``pi(x)_i = x_{2i}``, N = 2;
    * ``even-sofic``: the even shift (a sofic, non-finite-type system),
      ``pi(x)_i = x_{2i}``, N = 2;
    * ``even-sofic-3``: the even shift, ``pi(x)_i = x_{3i}``, N = 3.
    """
    from .subshift import golden_mean, sofic
    from .symcore import BlockCode

    full = SafetySet.full(BINARY)
    even = BlockCode.from_function(BINARY, BINARY, 1, lambda b: b[0], step=2)
    third = BlockCode.from_function(BINARY, BINARY, 1, lambda b: b[0], step=3)
    even_shift = sofic(BINARY, [(0, 0, 0), (0, 1, 1), (1, 1, 0)]).safety
    xi3 = xi_M(3)
    return {
        "identity": (full, BlockCode.identity(BINARY), 1),
        "xi3": (xi3.lam, xi3.factor.to_block_code(), 3),
        "even-full": (full, even, 2),
        "even-golden": (golden_mean().safety, even, 2),
        "even-sofic": (even_shift, even, 2),
        "even-sofic-3": (even_shift, third, 3),
    }


__all__ = [
    "ComposedCode", "m_for", "cut_times", "cut_budget", "PruneInstance", "build_instance",
    "AdmissibleSet", "overlap_image", "PruneTrace", "prune", "subset_sum_check",
    "FirstReturnResult", "periodic_cross_check", "first_return_horseshoe", "corpus",
]
