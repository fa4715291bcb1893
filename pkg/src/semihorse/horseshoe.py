"""Block horseshoes, overlap certificates and semi-horseshoe extraction.

A block horseshoe is the set ``Lambda`` of all one-sided concatenations of a
few words (blocks) of common length N, together with the block-index factor
onto a full shift. The key property is step-disjointness,
``Lambda`` and ``sigma^j Lambda`` disjoint for ``1 <= j <= N-1``, which is
decided exactly here as an emptiness question on safety automata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuredFailure
from .safety import SafetySet, code_image, includes, shift_image
from .symcore import Alphabet, BlockCode, Cylinder, UPPoint, Word, _check_same, slide
from .subshift import SubshiftPresentation, is_mixing_sft

BINARY = Alphabet.range(2)


# ---------------------------------------------------------------------------
# overlap certificates


@dataclass(frozen=True)
class OverlapCertificate:
    """Outcome of a step-disjointness test over shifts ``1..max_shift``.

    For ``verdict == "overlap"``, ``x`` and ``z`` both lie in the tested set
    and ``sigma^shift x == z``.
    """

    verdict: str
    max_shift: int
    shift: int | None = None
    x: UPPoint | None = None
    z: UPPoint | None = None
    shifts: tuple[int, ...] | None = None

    @property
    def tested(self) -> tuple[int, ...]:
        return tuple(range(1, self.max_shift + 1)) if self.shifts is None else self.shifts

    @property
    def free(self) -> bool:
        return self.verdict == "free"

    def revalidate(self, lam: SafetySet) -> bool:
        """Re-check the certificate against ``lam`` independently of how it was found.

        An overlap is checked by membership and by direct coordinate
        comparison over ``2 * max_shift * period`` coordinates; a free
        verdict is re-derived with the automaton intersection
        ``lam & shift_image(lam, j)``.
        """
        if self.verdict == "overlap":
            if not (lam.contains(self.x) and lam.contains(self.z)):
                return False
            j = self.shift
            span = 2 * max(self.max_shift, 1) * (len(self.x.preperiod) + len(self.x.cycle) + len(self.z.cycle))
            return all(self.x.at(i + j) == self.z.at(i) for i in range(span))
        from .safety import intersect
        return all(intersect(lam, shift_image(lam, j)).is_empty() for j in self.tested)

    def to_json(self) -> dict:
        d = {"verdict": self.verdict, "max_shift": self.max_shift}
        if self.shifts is not None:
            d["shifts"] = list(self.shifts)
        if self.verdict == "overlap":
            d.update(shift=self.shift, x=str(self.x), z=str(self.z))
        return d


def _word_to(lam: SafetySet, target: int, length: int) -> tuple[int, ...]:
    """Lexicographically least word of the given length leading start -> target."""
    layers = [{lam.start}]
    for _ in range(length):
        layers.append({t for q in layers[-1] for t in lam.delta[q] if t >= 0})
    # backward: states at each depth that can still reach target
    good = [set() for _ in range(length + 1)]
    good[length] = {target}
    for d in range(length - 1, -1, -1):
        good[d] = {q for q in layers[d] if any(t in good[d + 1] for t in lam.delta[q] if t >= 0)}
    word = []
    q = lam.start
    for d in range(length):
        a = next(a for a, t in enumerate(lam.delta[q]) if t >= 0 and t in good[d + 1])
        word.append(a)
        q = lam.delta[q][a]
    return tuple(word)


def _overlap_at(lam: SafetySet, roots_b: Sequence[int], r: int) -> tuple[UPPoint, UPPoint] | None:
    """Decide ``lam & sigma^r lam``; ``roots_b`` are the states at depth r.

    Works on the product of ``lam`` with the (nondeterministic) shifted copy
    without determinizing: the intersection is nonempty iff some root pair
    has an infinite path. Returns ``(x, z)`` with ``z`` the least common
    point and ``sigma^r x = z``, or None.
    """
    delta = lam.delta
    roots = [(lam.start, s) for s in sorted(roots_b)]
    succ: dict[tuple[int, int], list[tuple[int, tuple[int, int]]]] = {}
    stack = list(roots)
    seen = set(roots)
    while stack:
        node = stack.pop()
        p, q = node
        out = []
        for a, t1 in enumerate(delta[p]):
            if t1 < 0:
                continue
            t2 = delta[q][a]
            if t2 < 0:
                continue
            nxt = (t1, t2)
            out.append((a, nxt))
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
        succ[node] = out
    # greatest fixpoint of "has a live successor"
    preds: dict = {n: [] for n in succ}
    outdeg = {n: len(v) for n, v in succ.items()}
    for n, v in succ.items():
        for _, t in v:
            preds[t].append(n)
    dead = set()
    queue = [n for n, d in outdeg.items() if d == 0]
    while queue:
        n = queue.pop()
        if n in dead:
            continue
        dead.add(n)
        for m in preds[n]:
            outdeg[m] -= 1
            if outdeg[m] == 0:
                queue.append(m)
    live_roots = frozenset(n for n in roots if n not in dead)
    if not live_roots:
        return None
    current = live_roots
    letters: list[int] = []
    first_seen: dict[frozenset, int] = {}
    while current not in first_seen:
        first_seen[current] = len(letters)
        a = min(b for n in current for b, t in succ[n] if t not in dead)
        letters.append(a)
        current = frozenset(t for n in current for b, t in succ[n] if b == a and t not in dead)
    i = first_seen[current]
    z = UPPoint(lam.alphabet, tuple(letters[:i]), tuple(letters[i:]))
    s = next(s for _, s in sorted(live_roots) if lam.accepts_from(s, z))
    w = _word_to(lam, s, r)
    x = UPPoint(lam.alphabet, w + z.preperiod, z.cycle)
    return x, z


def step_disjointness(lam: SafetySet, k: int, shifts: Iterable[int] | None = None) -> OverlapCertificate:
    """Test ``lam & sigma^j lam == {}`` for every ``1 <= j <= k-1``.

    ``shifts`` restricts the test to a subset of that range.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    wanted = set(range(1, k)) if shifts is None else set(shifts)
    if any(not 1 <= j < k for j in wanted):
        raise DomainError("shifts must lie in 1..k-1")
    tag = None if shifts is None else tuple(sorted(wanted))
    if lam.is_empty() or not wanted:
        return OverlapCertificate("free", k - 1, shifts=tag)
    depth = {lam.start}
    for j in range(1, max(wanted) + 1):
        depth = {t for q in depth for t in lam.delta[q] if t >= 0}
        if j not in wanted:
            continue
        hit = _overlap_at(lam, depth, j)
        if hit is not None:
            return OverlapCertificate("overlap", k - 1, j, hit[0], hit[1], tag)
    return OverlapCertificate("free", k - 1, shifts=tag)


def _as_tuple(b) -> tuple[int, ...]:
    return b.letters if isinstance(b, Word) else tuple(int(a) for a in b)


def overlap_free_test(blocks: Sequence[Word | Sequence[int]], N: int,
                      alphabet: Alphabet | None = None) -> OverlapCertificate:
    """Whether the concatenation set of ``blocks`` is disjoint from its shifts by ``1..N-1``.

    Examples
    --------
    >>> overlap_free_test([(0, 0, 1), (0, 1, 1)], 3).verdict
    'free'
    >>> c = overlap_free_test([(0, 1), (1, 0)], 2)
    >>> c.shift, str(c.z), str(c.x)
    (1, '(01)', '(10)')
    """
    bs = [_as_tuple(b) for b in blocks]
    if any(len(b) != N for b in bs):
        raise DomainError(f"all blocks must have length {N}")
    if alphabet is None:
        alphabet = next((b.alphabet for b in blocks if isinstance(b, Word)), BINARY)
    lam = SafetySet.block_pattern(alphabet, [bs])
    return step_disjointness(lam, N)


# ---------------------------------------------------------------------------
# block horseshoes


@dataclass(frozen=True)
class BlockIndexCode:
    """Block-index factor: reads N letters, emits the index of that block.

    Behaves like a :class:`~semihorse.symcore.BlockCode` with window and step
    N, but stores only the listed blocks, so long blocks are cheap. Windows
    that are not blocks map to 0; they never occur on the horseshoe.
    """

    source: Alphabet
    blocks: tuple[tuple[int, ...], ...]

    @property
    def window(self) -> int:
        return len(self.blocks[0])

    @property
    def step(self) -> int:
        return self.window

    @cached_property
    def target(self) -> Alphabet:
        return Alphabet.range(len(self.blocks))

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {b: i for i, b in enumerate(self.blocks)}

    def local(self, block: Sequence[int]) -> int:
        return self._index.get(tuple(block), 0)

    def apply(self, x: UPPoint) -> UPPoint:
        return slide(self, x)

    def to_block_code(self) -> BlockCode:
        return BlockCode.from_function(self.source, self.target, self.window, self.local, self.step)


@dataclass(frozen=True)
class BlockHorseshoe:
    """All concatenations of ``blocks`` (a power-of-two count, length N each).

    Attributes
    ----------
    lam : SafetySet
        The concatenation set.
    factor : BlockIndexCode
        The block-index map onto the full shift on ``len(blocks)`` symbols;
        it intertwines ``sigma^N`` with ``sigma``.
    """

    alphabet: Alphabet
    N: int
    blocks: tuple[tuple[int, ...], ...]
    certificate: OverlapCertificate | None = None

    def __post_init__(self):
        bs = tuple(_as_tuple(b) for b in self.blocks)
        object.__setattr__(self, "blocks", bs)
        if self.N < 1:
            raise DomainError("N must be >= 1")
        n = len(bs)
        if n < 2 or n & (n - 1):
            raise DomainError("need 2^j blocks with j >= 1")
        if len(set(bs)) != n:
            raise DomainError("blocks must be distinct")
        if any(len(b) != self.N for b in bs):
            raise DomainError(f"all blocks must have length {self.N}")
        if any(not 0 <= a < self.alphabet.size for b in bs for a in b):
            raise DomainError("block letter outside alphabet")

    @cached_property
    def lam(self) -> SafetySet:
        return SafetySet.block_pattern(self.alphabet, [self.blocks])

    @cached_property
    def factor(self) -> BlockIndexCode:
        return BlockIndexCode(self.alphabet, self.blocks)

    def point(self, indices: UPPoint) -> UPPoint:
        """The point of ``lam`` whose block indices are ``indices``."""
        pre = sum((self.blocks[i] for i in indices.preperiod), ())
        cyc = sum((self.blocks[i] for i in indices.cycle), ())
        return UPPoint(self.alphabet, pre, cyc)

    def admissible_in(self, x: SubshiftPresentation) -> bool:
        _check_same(x.alphabet, self.alphabet)
        return includes(x.safety, self.lam)

    def to_json(self) -> dict:
        return {"N": self.N, "blocks": [self.alphabet.render(b) for b in self.blocks],
                "certificate": self.certificate.to_json() if self.certificate else None}


def xi_M(M: int) -> BlockHorseshoe:
    """The two-block family ``{0^{M-1}1, 0^{M-2}11}`` (``{0, 1}`` for M = 1).

    Raises
    ------
    DomainError
        For ``M <= 0``.
    StructuredFailure
        For ``M == 2``, where the formula gives ``{01, 11}``; these overlap at
        shift 1 (``sigma(01 11 11 ...) = 11 11 ...``), so the family is not
        step-disjoint and is excluded.
    """
    if not isinstance(M, (int, np.integer)) or M <= 0:
        raise DomainError(f"M must be a positive integer, got {M!r}")
    M = int(M)
    if M == 2:
        cert = overlap_free_test([(0, 1), (1, 1)], 2)
        raise StructuredFailure(
            "M = 2 is excluded: the blocks 01 and 11 overlap at shift 1, so the "
            "two-block family is not step-disjoint for M = 2",
            stage="xi", detail={"M": 2, "certificate": cert.to_json()})
    if M == 1:
        blocks = ((0,), (1,))
    else:
        blocks = ((0,) * (M - 1) + (1,), (0,) * (M - 2) + (1, 1))
    return BlockHorseshoe(BINARY, M, blocks, overlap_free_test(blocks, M))


def _cylinder_family(c: tuple[int, ...], pad: int, n_blocks: int) -> list[tuple[int, ...]]:
    n = len(c)
    if n_blocks == 2:
        return [c + (0,) * (n + 2 + pad) + (1,), c + (0,) * (n + 1 + pad) + (1, 1)]
    a = n + 3 + pad
    return [c + (0,) * a + (1, t0, t1, 1) for t0 in (0, 1) for t1 in (0, 1)]


def horseshoe_in_cylinder(C: Cylinder, n_blocks: int = 2) -> BlockHorseshoe:
    """A step-disjoint block horseshoe whose points all start with C's prefix.

    Candidates, with ``c`` the prefix and padding ``pad = 0, 1, ...``:

    * two blocks: ``c 0^{|c|+2+pad} 1`` and ``c 0^{|c|+1+pad} 11``;
    * four blocks: ``c 0^{|c|+3+pad} 1 t 1`` for ``t`` in ``{0,1}^2``.

    Each candidate is accepted only after :func:`overlap_free_test` and the
    containment ``lam <= C`` pass. Padding stops at ``2|c| + 8``.
    """
    if n_blocks not in (2, 4):
        raise DomainError("n_blocks must be 2 or 4")
    if C.alphabet.size < 2:
        raise DomainError("cylinder alphabet needs the letters 0 and 1")
    c = C.prefix
    cyl = SafetySet.cylinder(C)
    last = None
    for pad in range(2 * len(c) + 9):
        blocks = _cylinder_family(c, pad, n_blocks)
        N = len(blocks[0])
        cert = overlap_free_test(blocks, N, C.alphabet)
        last = cert
        if not cert.free:
            continue
        h = BlockHorseshoe(C.alphabet, N, tuple(blocks), cert)
        if includes(cyl, h.lam):
            return h
    raise StructuredFailure(f"no step-disjoint horseshoe in {C} up to padding {2 * len(c) + 8}",
                            stage="cylinder", detail={"last_certificate": last.to_json() if last else None})


# ---------------------------------------------------------------------------
# verification of a semi-horseshoe


@dataclass(frozen=True)
class SemiHorseshoeCertificate:
    """Result of :func:`verify_semi_horseshoe`.

    ``equivariance_mode`` is ``"exhaustive"`` when every periodic point in
    range was tested and ``"sampled"`` otherwise.
    """

    invariant: bool
    equivariant: bool
    surjective: bool
    depth: int
    points_checked: int
    equivariance_mode: str
    image_count: int | None
    target_count: int | None
    failure: str | None = None

    @property
    def passed(self) -> bool:
        return self.invariant and self.equivariant and self.surjective

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"invariant": self.invariant, "equivariant": self.equivariant,
                "surjective": self.surjective, "depth": self.depth,
                "points_checked": self.points_checked, "equivariance_mode": self.equivariance_mode,
                "image_count": None if self.image_count is None else str(self.image_count),
                "target_count": None if self.target_count is None else str(self.target_count),
                "failure": self.failure, "passed": self.passed}


def _periodic_sample(lam: SafetySet, N: int, D: int, cap: int, samples: int,
                     rng: np.random.Generator) -> tuple[list[UPPoint], str]:
    """Points of ``lam`` that are ``sigma^N``-periodic with period at most D."""
    total = sum(lam.count(t * N) for t in range(1, D + 1))
    pts = []
    if total <= cap:
        for t in range(1, D + 1):
            for w in lam.words(t * N):
                x = UPPoint(lam.alphabet, (), w)
                if lam.contains(x):
                    pts.append(x)
        return list(dict.fromkeys(pts)), "exhaustive"
    for _ in range(samples):
        t = int(rng.integers(1, D + 1))
        q, w = lam.start, []
        for _ in range(t * N):
            opts = [a for a, s in enumerate(lam.delta[q]) if s >= 0]
            a = opts[int(rng.integers(len(opts)))]
            w.append(a)
            q = lam.delta[q][a]
        x = UPPoint(lam.alphabet, (), tuple(w))
        if q == lam.start or lam.contains(x):
            pts.append(x)
    return pts, "sampled"


def verify_semi_horseshoe(lam: SafetySet, pi, N: int, D: int, *, cap: int = 4096,
                          samples: int = 256, seed: int = 0) -> SemiHorseshoeCertificate:
    """Check that ``pi`` is a factor map ``(lam, sigma^N) -> full shift``.

    Parameters
    ----------
    lam : SafetySet
    pi : BlockCode, BlockIndexCode or ProductBlockFactor
        Anything with ``apply(UPPoint)`` and the sliding-code attributes
        (``source``, ``target``, ``window``, ``step``, ``local``).
        A :class:`ProductBlockFactor` emits ``p`` digits per ``sigma^N``.
    N : int
    D : int
        Depth: periodic points of ``sigma^N``-period at most D are used for
        equivariance, and surjectivity is reported on words of length D.

    Notes
    -----
    (a) ``sigma^N lam <= lam`` by automaton inclusion. (b) ``pi(sigma^N x)
    == sigma^p pi(x)`` on periodic points, exhaustively when there are at
    most ``cap`` of them, else on ``samples`` seeded random walks. (c) The image
    automaton is the full shift, which is exact and implies every depth.
    """
    if D < 1:
        raise DomainError("D must be >= 1")
    if lam.is_empty():
        return SemiHorseshoeCertificate(False, False, False, D, 0, "exhaustive", 0, None, "empty set")
    invariant = includes(lam, shift_image(lam, N))
    out_shift = getattr(pi, "outputs_per_block", 1)
    pts, mode = _periodic_sample(lam, N, D, cap, samples, np.random.default_rng(seed))
    failure = None if invariant else "set is not sigma^N-invariant"
    equivariant = True
    for x in pts:
        if pi.apply(x.shift(N)) != pi.apply(x).shift(out_shift):
            equivariant = False
            failure = failure or f"equivariance fails at {x}"
            break
    if isinstance(pi, ProductBlockFactor):
        img = code_image(lam, pi.chunk_code)
        surjective = img == pi.image_pattern
        m = pi.m
        image_count = m ** D if surjective else None
        target_count = m ** D
    else:
        img = code_image(lam, pi)
        surjective = img.is_universal()
        image_count = img.count(D)
        target_count = pi.target.size ** D
    if not surjective:
        failure = failure or "factor image is not the full shift"
    return SemiHorseshoeCertificate(invariant, equivariant, surjective, D, len(pts), mode,
                                    image_count, target_count, failure)


# ---------------------------------------------------------------------------
# semi-horseshoe extraction for mixing SFTs


@dataclass(frozen=True)
class ExtractionParams:
    """Knobs of the extractor.

    Attributes
    ----------
    eta : float
        Entropy target; the output satisfies ``log(m)/k > eta``.
    sep_k : int
        Separation scale: segments are ``(n*-sep_k, e^{-sep_k})``-separated.
    l_min, l_max : int
        Range searched for the marker scale l (marker length 6l, segment
        length ``n* = l``).
    marker_tries : int
        Seeded random candidates tried per l for the marker.
    p_max : int
        Largest number of segments per block.
    depth : int
        Depth used by :func:`verify_semi_horseshoe`.
    seed : int
    """

    eta: float
    sep_k: int = 0
    l_min: int = 4
    l_max: int = 16
    marker_tries: int = 2000
    p_max: int = 400
    depth: int = 8
    seed: int = 0

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError("eta must be positive")
        if self.sep_k < 0 or self.l_min < 1 or self.l_max < self.l_min:
            raise DomainError("need sep_k >= 0 and 1 <= l_min <= l_max")
        if self.marker_tries < 1 or self.p_max < 1 or self.depth < 1:
            raise DomainError("budgets must be positive")


@dataclass(frozen=True)
class ProductBlockFactor:
    """Factor of ``(lam, sigma^k)`` onto the full shift over ``Gamma^p``.

    A block is ``marker s_1 ... s_p`` with every ``s_i`` in ``segments``;
    its image letter is the tuple of segment indices. Points of the target
    are written digit by digit (p digits per block), so ``apply`` returns a
    point over ``{0, ..., |segments|-1}`` and ``sigma^k`` corresponds to
    ``sigma^p`` there.
    """

    alphabet: Alphabet
    marker: tuple[int, ...]
    segments: tuple[tuple[int, ...], ...]
    p: int

    def __post_init__(self):
        n = len(self.segments[0])
        if any(len(s) != n for s in self.segments):
            raise DomainError("segments must share one length")
        if len(self.marker) % n:
            raise DomainError("marker length must be a multiple of the segment length")

    @property
    def seg_len(self) -> int:
        return len(self.segments[0])

    @property
    def k(self) -> int:
        return len(self.marker) + self.p * self.seg_len

    @property
    def outputs_per_block(self) -> int:
        return self.p

    @property
    def m(self) -> int:
        return len(self.segments) ** self.p

    @property
    def log_m(self) -> float:
        return self.p * math.log(len(self.segments))

    @cached_property
    def digits(self) -> Alphabet:
        return Alphabet.range(len(self.segments))

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.segments)}

    @cached_property
    def lam(self) -> SafetySet:
        return SafetySet.block_pattern(self.alphabet, [[self.marker]] + [self.segments] * self.p)

    def block_digits(self, block: Sequence[int]) -> tuple[int, ...]:
        block = tuple(block)
        u, n = len(self.marker), self.seg_len
        if len(block) != self.k or block[:u] != self.marker:
            raise DomainError("not a block of this factor")
        try:
            return tuple(self._index[block[u + i * n:u + (i + 1) * n]] for i in range(self.p))
        except KeyError:
            raise DomainError("block contains a word outside the segment family") from None

    def letter(self, block: Sequence[int]) -> int:
        """The target letter of a block as an integer in ``[0, m)``."""
        v = 0
        for d in self.block_digits(block):
            v = v * len(self.segments) + d
        return v

    def apply(self, x: UPPoint) -> UPPoint:
        _check_same(self.alphabet, x.alphabet)
        k = self.k
        p, c = len(x.preperiod), len(x.cycle)
        i0 = -(-p // k)
        period = c // math.gcd(c, k)
        ds = [self.block_digits(x.window(k * i, k)) for i in range(i0 + period)]
        return UPPoint(self.digits, sum(ds[:i0], ()), sum(ds[i0:], ()))

    def chunk_marks(self) -> int:
        return len(self.marker) // self.seg_len

    @cached_property
    def chunk_code(self) -> "_ChunkCode":
        return _ChunkCode(self)

    @cached_property
    def image_pattern(self) -> SafetySet:
        """The expected chunk-level image: marker labels then p free digits."""
        g = len(self.segments)
        t = self.chunk_code.target
        pieces = [[(g + i,)] for i in range(self.chunk_marks())] + [[(d,) for d in range(g)]] * self.p
        return SafetySet.block_pattern(t, pieces)

    def to_json(self) -> dict:
        r = self.alphabet.render
        return {"marker": r(self.marker), "segments": [r(s) for s in self.segments],
                "p": self.p, "k": self.k, "log_m": self.log_m}


class _ChunkCode:
    """Reads ``seg_len`` letters at a time; segments give digits, marker chunks labels."""

    def __init__(self, f: ProductBlockFactor):
        n = f.seg_len
        g = len(f.segments)
        marks = f.chunk_marks()
        self.source = f.alphabet
        self.target = Alphabet.of([str(i) for i in range(g)] + [f"m{i}" for i in range(marks)])
        self.window = self.step = n
        table = dict(f._index)
        for i in range(marks):
            table.setdefault(f.marker[i * n:(i + 1) * n], g + i)
        self._table = table

    def local(self, block: Sequence[int]) -> int:
        return self._table.get(tuple(block), 0)


@dataclass
class ExtractionResult:
    """Output of :func:`semi_horseshoe_extract_sft`."""

    k: int
    lam: SafetySet
    factor: ProductBlockFactor
    certificate: OverlapCertificate
    verification: SemiHorseshoeCertificate
    constants: dict
    rate: float = field(init=False)

    def __post_init__(self):
        self.rate = self.factor.log_m / self.k

    @property
    def m(self) -> int:
        return self.factor.m

    def to_json(self) -> dict:
        return {"k": self.k, "log_m": self.factor.log_m, "rate": self.rate,
                "constants": self.constants, "certificate": self.certificate.to_json(),
                "verification": self.verification.to_json(), "factor": self.factor.to_json()}


def _random_word(x: SubshiftPresentation, start: tuple[int, ...], length: int,
                 rng: np.random.Generator) -> tuple[int, ...] | None:
    s = x.safety
    q = s.run(start)
    if q < 0:
        return None
    w = list(start)
    while len(w) < length:
        opts = [a for a, t in enumerate(s.delta[q]) if t >= 0]
        a = opts[int(rng.integers(len(opts)))]
        w.append(a)
        q = s.delta[q][a]
    return tuple(w)


def _claim_one(u: tuple[int, ...], l: int) -> bool:
    """The l-prefix of u does not reappear at offsets 1..5l."""
    head = u[:l]
    return all(u[j:j + l] != head for j in range(1, 5 * l + 1))


def semi_horseshoe_extract_sft(x: SubshiftPresentation, params: ExtractionParams,
                               entropy: float | None = None) -> ExtractionResult:
    """Build a step-disjoint semi-horseshoe of entropy rate above ``params.eta``.

    The construction glues a marker ``u`` of length 6l (one period of a
    periodic point whose l-prefix does not return within 5l steps) with p
    segments of length ``n* = l`` from a separated family that avoids every
    window of ``u``. All pieces start with a common word ``alpha`` of
    length ``order - 1`` and stay admissible when followed by ``alpha``,
    so any concatenation lies in the SFT. Constants follow the inequality
    ``p n* rho / (6l + p n*) > eta + tau`` with ``rho`` the realized rate of
    the segment family and ``tau = (h - eta)/5``.

    Raises
    ------
    DomainError
        If X is not a mixing SFT or ``eta >= h_top(X)``.
    StructuredFailure
        If no parameters within the bounds work; the detail carries the best
        (k, log m, rate) seen.
    """
    from .entropy import _greedy, topological_entropy

    if x.kind not in ("full", "sft"):
        raise DomainError("extractor needs a full shift or an SFT")
    if not is_mixing_sft(x):
        raise DomainError("SFT is not mixing (transition matrix not primitive)")
    h = topological_entropy(x) if entropy is None else entropy
    eta = params.eta
    if eta >= h:
        raise DomainError(f"eta = {eta} must be below h_top = {h}")
    tau = (h - eta) / 5
    r = x.order
    s = x.safety
    rng = np.random.default_rng(params.seed)
    alphas = s.words(r - 1) if r > 1 else [()]
    best = None
    for l in range(max(params.l_min, r, params.sep_k + 1), params.l_max + 1):
        for alpha in alphas:
            cands = [w for w in s.words(l) if w[:len(alpha)] == alpha and s.accepts(w + alpha)]
            if len(cands) < 2:
                continue
            marker = None
            for _ in range(params.marker_tries):
                u = _random_word(x, alpha, 6 * l, rng)
                if u is not None and s.accepts(u + alpha) and _claim_one(u, l):
                    marker = u
                    break
            if marker is None:
                continue
            windows = {marker[j:j + l] for j in range(5 * l + 1)}
            pool = [w for w in cands if w not in windows]
            n_sep = l - params.sep_k
            gamma = _greedy(pool, n_sep, params.sep_k, 1) if params.sep_k else pool
            if len(gamma) < 2:
                continue
            rho = math.log(len(gamma)) / l
            if rho <= eta + 2 * tau:
                best = best or {"l": l, "rate_segments": rho}
                continue
            p = math.floor(6 * (eta + tau) / (rho - eta - tau)) + 1
            if p > params.p_max:
                continue
            factor = ProductBlockFactor(x.alphabet, marker, tuple(gamma), p)
            k = factor.k
            margin = factor.log_m - k * eta
            best = {"k": k, "log_m": factor.log_m, "rate": factor.log_m / k}
            if margin <= 1e-12:
                continue
            lam = factor.lam
            if not includes(s, lam):
                continue
            cert = step_disjointness(lam, k)
            if not cert.free:
                best["certificate"] = cert.to_json()
                continue
            ver = verify_semi_horseshoe(lam, factor, k, params.depth, seed=params.seed)
            constants = {"h": h, "eta": eta, "tau": tau, "order": r, "alpha": list(alpha),
                         "l": l, "n_star": l, "marker_length": 6 * l, "p": p, "k": k,
                         "segments": len(gamma), "rho": rho, "log_m": factor.log_m,
                         "margin": margin, "sep_k": params.sep_k}
            if not ver.passed:
                best["verification"] = ver.to_json()
                continue
            return ExtractionResult(k, lam, factor, cert, ver, constants)
    raise StructuredFailure("semi-horseshoe search exhausted its bounds", stage="extract",
                            detail={"best": best})


__all__ = [
    "OverlapCertificate", "overlap_free_test", "step_disjointness", "BlockIndexCode",
    "BlockHorseshoe", "xi_M", "horseshoe_in_cylinder", "SemiHorseshoeCertificate",
    "verify_semi_horseshoe", "ExtractionParams", "ProductBlockFactor", "ExtractionResult",
    "semi_horseshoe_extract_sft",
]
