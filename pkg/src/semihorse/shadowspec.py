"""Pseudo-orbits, tracing, gluing and finite-horizon specification checks.

All radii live on the grid ``e^{-k}``, where ``d(x, y) < e^{-k}`` means
agreement on coordinates ``0..k``. Every check therefore reduces to exact
symbol comparisons and dynamic programming over safety automata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .entropy import Budget, _budget, mistake_ball_membership
from .errors import DomainError, StructuredFailure
from .horseshoe import step_disjointness
from .reporting import csv_text
from .safety import SafetySet, intersect, lex_least, shift_image, shift_preimage
from .subshift import (SubshiftPresentation, counterexample_e, counterexample_x, from_automaton,
                       power_recoding, sft_order_test)
from .symcore import Alphabet, BlockCode, UPPoint, Word, grid, grid_index, shift_distance

# ---------------------------------------------------------------------------
# pseudo-orbits and tracing


def _agree_depth(x: UPPoint, y: UPPoint) -> int | None:
    """Index of the first disagreement, None when equal."""
    return x.first_difference(y)


@dataclass(frozen=True)
class PseudoOrbit:
    """A finite delta-pseudo-orbit ``x_0, ..., x_{n-1}`` with ``delta = e^{-m}``.

    ``m = None`` stands for ``delta = 0``, i.e. a true orbit segment. The
    consecutive condition ``d(sigma x_i, x_{i+1}) < delta`` is checked on
    construction.
    """

    points: tuple[UPPoint, ...]
    m: int | None

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise DomainError("a pseudo-orbit needs at least one point")
        if self.m is not None and self.m < 0:
            raise DomainError("m must be >= 0")
        a = pts[0].alphabet
        for i in range(len(pts) - 1):
            if pts[i + 1].alphabet != a:
                raise DomainError("points use different alphabets")
            j = _agree_depth(pts[i].shift(1), pts[i + 1])
            if j is not None and (self.m is None or j <= self.m):
                raise DomainError(f"seam {i}: d(sigma x_{i}, x_{i + 1}) = e^-{j} is not below delta")

    @property
    def delta(self) -> float:
        return 0.0 if self.m is None else grid(self.m)

    @property
    def alphabet(self) -> Alphabet:
        return self.points[0].alphabet

    def __len__(self) -> int:
        return len(self.points)

    def tightest_m(self) -> int | None:
        """Largest m for which this is still an ``e^{-m}``-pseudo-orbit."""
        depths = [_agree_depth(self.points[i].shift(1), self.points[i + 1])
                  for i in range(len(self.points) - 1)]
        finite = [j for j in depths if j is not None]
        return min(finite) - 1 if finite else None


@dataclass(frozen=True)
class TracingResult:
    """A tracer z with ``d(sigma^i z, x_i) < eps_out`` for every covered i.

    ``eps_out = 0`` means exact tracing: every distance is 0.
    """

    z: UPPoint
    eps_out: float
    distances: tuple[float, ...]
    shift: int = 0

    def recheck(self, po: PseudoOrbit) -> bool:
        if len(po) != len(self.distances):
            return False
        for i, x in enumerate(po.points):
            d = shift_distance(self.z.shift(i), x)
            if d != self.distances[i] or not (d < self.eps_out or d == self.eps_out == 0):
                return False
        return True

    def to_json(self) -> dict:
        return {"z": str(self.z), "eps_out": self.eps_out, "max_distance": max(self.distances),
                "length": len(self.distances)}


def _order_of(x: SubshiftPresentation, order: int | None) -> int:
    if order is None:
        return x.order
    if not sft_order_test(x, order):
        raise DomainError(f"the system is not the SFT of its admissible {order}-words")
    return order


def min_trace_m(order: int) -> int:
    """Smallest m for which the diagonal rule traces every ``e^{-m}``-pseudo-orbit.

    Consecutive points agree on ``m + 1`` coordinates, so each window of
    length ``m + 2`` of the tracer is a window of some ``x_i``; windows of the
    order length are then admissible once ``m + 2 >= order``.
    """
    return max(order - 2, 0)


def trace_sft(x: SubshiftPresentation, po: PseudoOrbit, *, order: int | None = None) -> TracingResult:
    """Trace a pseudo-orbit in an SFT by the diagonal rule ``z_i = (x_i)_0``.

    The last point contributes its whole tail, so ``sigma^{n-1} z = x_{n-1}``.
    The achieved radius is ``e^{-(m+1)}`` (exact orbits give distance 0).

    Raises
    ------
    DomainError
        When ``delta`` is too coarse for the order, naming the minimal m.
    """
    r = _order_of(x, order)
    need = min_trace_m(r)
    if po.m is not None and po.m < need:
        raise DomainError(f"delta = e^-{po.m} is too coarse for order {r}; need m >= {need}")
    pts = po.points
    diag = tuple(p.at(0) for p in pts[:-1])
    last = pts[-1]
    z = UPPoint(last.alphabet, diag + last.preperiod, last.cycle)
    if not x.safety.contains(z):
        raise StructuredFailure("diagonal tracer left the system", stage="trace",
                                detail={"z": str(z)})
    dist = tuple(shift_distance(z.shift(i), p) for i, p in enumerate(pts))
    res = TracingResult(z, _radius(dist) if po.m is None else grid(po.m + 1), dist)
    if not res.recheck(po):
        raise StructuredFailure("tracing bound failed on re-check", stage="trace")
    return res


def composite_tracing_check(y: SafetySet, L: int, po: PseudoOrbit) -> TracingResult:
    """Trace in ``X = Y u sigma Y u ... u sigma^{L-1} Y`` through ``(Y, sigma^L)``.

    ``Y`` must satisfy ``sigma^L Y <= Y``, its L-block recoding must be an
    SFT, and the copies ``sigma^i Y`` must be pairwise disjoint (checked;
    otherwise the recipe does not apply and the call is rejected).

    The pseudo-orbit is first realigned to start in Y: with
    ``x_0 in sigma^k Y`` a preimage ``y_0`` is prepended together with its
    k - 1 iterates. The L-skip subsequence is traced in the recoding and the
    tracer is shifted back by k.
    """
    if L < 1:
        raise DomainError("L must be >= 1")
    cert = step_disjointness(y, L)
    if not cert.free:
        raise DomainError(f"the {L} shifted copies of Y overlap (shift {cert.shift}); "
                          "the composite tracing recipe needs them disjoint")
    x0 = po.points[0]
    k = next((i for i in range(L) if shift_image(y, i).contains(x0)), None)
    if k is None:
        raise DomainError("x_0 lies in no shifted copy of Y")
    y0 = lex_least(intersect(y, shift_preimage(SafetySet.singleton(x0), k)))
    head = [y0.shift(i) for i in range(k)]
    pts = head + list(po.points)
    # pad with true iterates so the last block is complete
    while len(pts) % L != 1 and L > 1:
        pts.append(pts[-1].shift(1))
    skip = pts[::L]
    if not all(y.contains(p) for p in skip):
        raise StructuredFailure("a phase-0 point left Y; delta too coarse", stage="composite")
    rec, code = power_recoding(from_automaton(y), L)
    rec_pts = [code.apply(p) for p in skip]
    rec_m = _chain_m(rec_pts)
    order = _least_order(rec)
    traced = trace_sft(rec, PseudoOrbit(tuple(rec_pts), rec_m), order=order)
    blocks = _block_words(y, L, code)
    zy = UPPoint(y.alphabet, sum((blocks[a] for a in traced.z.preperiod), ()),
                 sum((blocks[a] for a in traced.z.cycle), ()))
    z = zy.shift(k)
    dist = tuple(shift_distance(z.shift(i), p) for i, p in enumerate(po.points))
    res = TracingResult(z, _radius(dist), dist, shift=k)
    if not res.recheck(po) or not y.contains(zy):
        raise StructuredFailure("composite tracer failed its re-check", stage="composite")
    return res


def _radius(dist: Sequence[float]) -> float:
    """Least grid radius strictly above every distance (0 if all vanish)."""
    worst = max(dist)
    return 0.0 if worst == 0 else grid(round(-math.log(worst)) - 1)


def _chain_m(points: Sequence[UPPoint]) -> int | None:
    if len(points) < 2:
        return None
    return PseudoOrbit(tuple(points), None if _all_exact(points) else 0).tightest_m()


def _all_exact(points: Sequence[UPPoint]) -> bool:
    return all(points[i].shift(1) == points[i + 1] for i in range(len(points) - 1))


def _least_order(x: SubshiftPresentation, max_order: int = 12) -> int:
    for n in range(1, max_order + 1):
        if sft_order_test(x, n):
            return n
    raise DomainError(f"recoding is not an SFT of order <= {max_order}")


def _block_words(y: SafetySet, L: int, code: BlockCode) -> dict[int, tuple[int, ...]]:
    return {code.local(w): w for w in y.words(L)}


def random_point_from(s: SafetySet, prefix: Sequence[int], tail: int, rng) -> UPPoint:
    """A point of s starting with ``prefix``: random letters, then the least cycle.

    After ``tail`` random admissible letters the walk follows the smallest
    admissible letter until a state repeats, which closes the cycle.
    """
    q = s.run(prefix)
    if q < 0:
        raise DomainError("prefix is not admissible")
    letters = list(prefix)
    for _ in range(tail):
        opts = [a for a, t in enumerate(s.delta[q]) if t >= 0]
        a = opts[int(rng.integers(len(opts)))]
        letters.append(a)
        q = s.delta[q][a]
    seen: dict[int, int] = {}
    while q not in seen:
        seen[q] = len(letters)
        a = next(a for a, t in enumerate(s.delta[q]) if t >= 0)
        letters.append(a)
        q = s.delta[q][a]
    i = seen[q]
    return UPPoint(s.alphabet, tuple(letters[:i]), tuple(letters[i:]))


def random_pseudo_orbit(x: SubshiftPresentation | SafetySet, length: int, m: int, rng,
                        tail: int = 12) -> PseudoOrbit:
    """Each ``x_{i+1}`` keeps ``m + 1`` letters of ``sigma x_i`` and continues at random."""
    s = x if isinstance(x, SafetySet) else x.safety
    pts = [random_point_from(s, (), tail + m + 1, rng)]
    for _ in range(length - 1):
        keep = pts[-1].shift(1).prefix(m + 1)
        pts.append(random_point_from(s, keep, tail, rng))
    return PseudoOrbit(tuple(pts), m)


def break_seam(po: PseudoOrbit, i: int, j: int) -> tuple[UPPoint, ...]:
    """Points of ``po`` with ``x_{i+1}`` altered at coordinate ``j <= m``.

    The result violates the pseudo-orbit condition at seam i; it is
    returned as a bare tuple since :class:`PseudoOrbit` would reject it.
    """
    if po.m is None or not 0 <= j <= po.m or not 0 <= i < len(po) - 1:
        raise DomainError("need a seam index i and a coordinate j <= m")
    x = po.points[i + 1]
    a = x.alphabet.size
    letters = list(x.prefix(j + 1))
    letters[j] = (letters[j] + 1) % a
    tail = x.shift(j + 1)
    bad = UPPoint(x.alphabet, tuple(letters) + tail.preperiod, tail.cycle)
    pts = list(po.points)
    pts[i + 1] = bad
    return tuple(pts)


# ---------------------------------------------------------------------------
# gluing and the non-shadowing counterexample


def glue(x: UPPoint, y: UPPoint, k: int, n: int) -> UPPoint:
    """``z_i = x_i`` for ``i <= k + n - 2`` and ``y_i`` for ``i >= k``.

    The two halves must agree on ``[k, k + n - 2]``.
    """
    if k < 0 or n < 1:
        raise DomainError("need k >= 0 and n >= 1")
    cut = k + n - 1
    if x.window(k, n - 1) != y.window(k, n - 1):
        raise DomainError("x and y disagree on the overlap window")
    tail = y.shift(cut)
    return UPPoint(x.alphabet, x.prefix(cut) + tail.preperiod, tail.cycle)


@dataclass(frozen=True)
class GluingWitness:
    """One-sided gluing for the counterexample at parameter m.

    The two-sided points are cut at index ``-offset``; positions below are
    one-sided indices.
    """

    m: int
    x: UPPoint
    y: UPPoint
    z: UPPoint
    offset: int
    twos: tuple[int, int]
    x_in: bool
    y_in: bool
    z_in: bool

    @property
    def gap(self) -> int:
        return self.twos[1] - self.twos[0]

    @property
    def ok(self) -> bool:
        return self.x_in and self.y_in and not self.z_in and self.gap % 2 == 1

    def to_json(self) -> dict:
        return {"m": self.m, "x": str(self.x), "y": str(self.y), "z": str(self.z),
                "offset": self.offset, "twos": list(self.twos), "gap": self.gap,
                "x_in_X": self.x_in, "y_in_X": self.y_in, "z_in_X": self.z_in, "ok": self.ok}


def counterexample_gluing(m: int) -> GluingWitness:
    """Glue two points of the counterexample along an agreement of length 2m + 2.

    Two-sided, ``x = (02)^inf 10 (01)^m 00 (01)^inf`` and
    ``y = (02)^inf 00 (10)^m (02)^inf`` agree on ``[0, 2m + 1]``; the glue
    has 2s at positions -3 and 2m + 2, an odd distance apart, so it lies
    in neither parity class. Here the points start at index -4.

    Examples
    --------
    >>> counterexample_gluing(1).gap
    7
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    a = Alphabet.range(3)
    x = UPPoint(a, (0, 2, 1, 0) + (0, 1) * m + (0, 0), (0, 1))
    y = UPPoint(a, (2, 0, 2, 0, 0) + (1, 0) * m, (0, 2))
    offset = 4
    z = glue(x, y, offset, 2 * m + 3)
    X = counterexample_x().safety
    pos = [i for i in range(len(z.preperiod) + 2 * z.period) if z.at(i) == 2]
    return GluingWitness(m, x, y, z, offset, (pos[0], pos[1]), X.contains(x), X.contains(y),
                         X.contains(z))


def even_aligned_control(u: UPPoint, v: UPPoint, cut: int) -> UPPoint:
    """Glue two points of E at an even cut; the result stays in E."""
    if cut % 2:
        raise DomainError("cut must be even")
    return UPPoint(u.alphabet, u.prefix(cut) + v.preperiod, v.cycle)


# ---------------------------------------------------------------------------
# specification checks


@dataclass(frozen=True)
class SpecQuery:
    """Targets ``x_1..x_m``, block length n, radius eps and mistake budget g."""

    targets: tuple[UPPoint, ...]
    n: int
    eps: float
    g: Budget = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.n < 1 or not self.targets:
            raise DomainError("need n >= 1 and at least one target")

    @property
    def k(self) -> int:
        return max(grid_index(self.eps), 0)

    @property
    def budget(self) -> int:
        return min(_budget(self.g, self.n, self.eps), self.n - 1)


@dataclass(frozen=True)
class SpecWitness:
    word: tuple[int, ...]
    query: SpecQuery

    found = True

    def recheck(self, x: SubshiftPresentation) -> bool:
        q = self.query
        if not x.safety.accepts(self.word):
            return False
        length = q.n + q.k
        return all(mistake_ball_membership(t.prefix(length), self.word[j * q.n:j * q.n + length],
                                           q.n, q.eps, q.g)
                   for j, t in enumerate(q.targets))


@dataclass(frozen=True)
class NoWitness:
    """No admissible word works at this depth.

    ``tag`` is ``"bounded"`` (a finite search came up empty) or
    ``"structural"`` (a parity argument rules out every depth).
    """

    query: SpecQuery
    tag: str = "bounded"
    reason: str = ""
    cross_checked: bool = False

    found = False


def _spec_dp(s: SafetySet, q: SpecQuery) -> tuple[int, ...] | None:
    n, k, m = q.n, q.k, len(q.targets)
    cap = q.budget
    total = m * n + k
    targets = [t.prefix(n + k) for t in q.targets]
    # state: (automaton state, last k letters, mistakes in the current block)
    layer: dict = {(s.start, (), 0): None}
    history = [layer]
    for p in range(total):
        nxt: dict = {}
        for (state, tail, bad) in sorted(layer, key=lambda key: (key[0], key[1], key[2])):
            for a in range(s.alphabet.size):
                t = s.delta[state][a]
                if t < 0:
                    continue
                buf = tail + (a,)
                nb = bad
                if p >= k:
                    w = p - k  # window start
                    j, off = divmod(w, n)
                    if buf[-(k + 1):] != targets[j][off:off + k + 1]:
                        nb += 1
                    if nb > cap:
                        continue
                    if off == n - 1:
                        nb = 0
                key = (t, buf[len(buf) - k:] if k else (), nb)
                if key not in nxt:
                    nxt[key] = ((state, tail, bad), a)
        layer = nxt
        history.append(layer)
        if not layer:
            return None
    key = next(iter(sorted(layer)))
    word = []
    for lay in reversed(history[1:]):
        prev, a = lay[key]
        word.append(a)
        key = prev
    return tuple(reversed(word))


def _exhaustive_spec(s: SafetySet, q: SpecQuery) -> bool:
    length = len(q.targets) * q.n + q.k
    lw = q.n + q.k
    for w in s.words(length):
        if all(mistake_ball_membership(t.prefix(lw), w[j * q.n:j * q.n + lw], q.n, q.eps, q.g)
               for j, t in enumerate(q.targets)):
            return True
    return False


def _parity_structural(x: SubshiftPresentation, q: SpecQuery) -> str:
    if x.kind != "counterexample-x" or len(q.targets) != 2 or q.n % 2:
        return ""
    a = Alphabet.range(3)
    alpha, beta = UPPoint(a, (), (0, 2)), UPPoint(a, (), (2, 0))
    if q.targets != (alpha, beta) or not q.budget < q.n // 2:
        return ""
    h = q.n // 2
    return (f"in every point of X the 2s share one parity, so either the first block differs from "
            f"(02)^{h} or the second from (20)^{h} in at least {h} places, while the budget allows "
            f"{q.budget} per block")


def modified_almost_spec_check(x: SubshiftPresentation, query: SpecQuery, *,
                               cross_check_limit: int = 16) -> SpecWitness | NoWitness:
    """Look for ``z`` with ``sigma^{(j-1)n} z`` in the j-th mistake ball, j = 1..m.

    The search is a DP over the automaton, with the last k letters and the
    current block's mistake count as extra state. The word searched for has
    length ``m n + k`` where ``k = grid_index(eps)``. A NoWitness is checked
    by brute force when ``n m <= cross_check_limit``.
    """
    s = x.safety
    if any(t.alphabet != x.alphabet for t in query.targets):
        raise DomainError("targets must be over the system's alphabet")
    word = _spec_dp(s, query)
    if word is not None:
        w = SpecWitness(word, query)
        if not w.recheck(x):
            raise StructuredFailure("spec witness failed its re-check", stage="spec")
        return w
    crossed = False
    if query.n * len(query.targets) <= cross_check_limit:
        if _exhaustive_spec(s, query):
            raise StructuredFailure("DP missed a witness found by enumeration", stage="spec")
        crossed = True
    reason = _parity_structural(x, query)
    return NoWitness(query, "structural" if reason else "bounded", reason, crossed)


def min_mistake_profile(x: SubshiftPresentation | SafetySet, pattern: Sequence[int] | Word) -> int:
    """Least Hamming distance from an admissible word of the same length to ``pattern``.

    Examples
    --------
    >>> from semihorse.subshift import golden_mean
    >>> min_mistake_profile(golden_mean(), (1, 1, 1, 1))
    2
    """
    s = x if isinstance(x, SafetySet) else x.safety
    p = pattern.letters if isinstance(pattern, Word) else tuple(pattern)
    if s.is_empty():
        raise DomainError("empty system")
    best = {s.start: 0}
    for c in p:
        nxt: dict[int, int] = {}
        for q, v in best.items():
            for a, t in enumerate(s.delta[q]):
                if t < 0:
                    continue
                cost = v + (a != c)
                if cost < nxt.get(t, cost + 1):
                    nxt[t] = cost
        best = nxt
    return min(best.values())


def min_mistake_exhaustive(x: SubshiftPresentation, pattern: Sequence[int]) -> int:
    """Same as :func:`min_mistake_profile`, by enumerating the language."""
    p = tuple(pattern)
    return min(sum(a != b for a, b in zip(w, p)) for w in x.safety.words(len(p)))


@dataclass(frozen=True)
class PatternResult:
    word: tuple[int, ...] | None
    gaps_ok: tuple[bool, ...]
    tag: str = "bounded"

    @property
    def found(self) -> bool:
        return self.word is not None


def weak_spec_pattern_search(x: SubshiftPresentation, targets: Sequence[UPPoint | Sequence[int]],
                             windows: Sequence[tuple[int, int]], eps: float = 1.0,
                             g: Budget = None) -> PatternResult:
    """Find z with ``d(sigma^t z, sigma^{t-a_i} x_i) < eps`` for ``a_i <= t <= b_i``.

    At grid radius ``e^{-k}`` this pins ``z[a_i .. b_i + k]`` to
    ``x_i[0 .. b_i - a_i + k]``; the gaps are free. ``gaps_ok`` reports the
    condition ``a_{i+1} - b_i >= g(b_{i+1} - a_{i+1} + 1, eps)`` for each gap,
    which is informative only: the search runs either way.
    """
    if len(targets) != len(windows) or not windows:
        raise DomainError("need one window per target")
    for (a, b), (a2, _) in zip(windows, windows[1:]):
        if not (0 <= a <= b < a2):
            raise DomainError("windows must satisfy a_1 <= b_1 < a_2 <= ...")
    if not 0 <= windows[-1][0] <= windows[-1][1]:
        raise DomainError("windows must satisfy a_i <= b_i")
    k = max(grid_index(eps), 0)
    fixed: dict[int, int] = {}
    for t, (a, b) in zip(targets, windows):
        need = b - a + 1 + k
        letters = t.prefix(need) if isinstance(t, UPPoint) else tuple(t)
        if len(letters) < need:
            raise DomainError(f"target for window [{a}, {b}] needs {need} letters")
        for i in range(need):
            if fixed.setdefault(a + i, letters[i]) != letters[i]:
                return PatternResult(None, _gaps(windows, eps, g))
    total = max(fixed) + 1
    s = x.safety
    # backward: states from which the remaining constraints can be met
    live = [set() for _ in range(total + 1)]
    live[total] = set(range(s.n_states))
    for p in range(total - 1, -1, -1):
        for q in range(s.n_states):
            for a in ([fixed[p]] if p in fixed else range(s.alphabet.size)):
                t = s.delta[q][a]
                if t >= 0 and t in live[p + 1]:
                    live[p].add(q)
                    break
    if s.is_empty() or s.start not in live[0]:
        return PatternResult(None, _gaps(windows, eps, g))
    word, q = [], s.start
    for p in range(total):
        for a in ([fixed[p]] if p in fixed else range(s.alphabet.size)):
            t = s.delta[q][a]
            if t >= 0 and t in live[p + 1]:
                word.append(a)
                q = t
                break
    return PatternResult(tuple(word), _gaps(windows, eps, g))


def _gaps(windows, eps, g) -> tuple[bool, ...]:
    return tuple(a2 - b >= _budget(g, b2 - a2 + 1, eps)
                 for (_, b), (a2, b2) in zip(windows, windows[1:]))


# ---------------------------------------------------------------------------
# the full counterexample suite


@dataclass
class CounterexampleSuite:
    gluings: list[GluingWitness]
    order_tests: dict[int, bool]
    recoding_is_full: bool
    mistake_minima: dict[int, int]
    exhaustive_n2: int | None
    spec_checks: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (all(w.ok for w in self.gluings) and not any(self.order_tests.values())
                and self.recoding_is_full
                and all(v >= n for n, v in self.mistake_minima.items())
                and (self.exhaustive_n2 is None or self.exhaustive_n2 == self.mistake_minima.get(2)))

    def to_json(self) -> dict:
        return {"ok": self.ok, "gluings": [w.to_json() for w in self.gluings],
                "order_tests": {str(n): v for n, v in self.order_tests.items()},
                "recoding_is_full_4_shift": self.recoding_is_full,
                "mistake_minima": {str(n): v for n, v in self.mistake_minima.items()},
                "exhaustive_n2": self.exhaustive_n2, "spec_checks": self.spec_checks}

    def to_text(self) -> str:
        lines = ["counterexample suite", f"  verdict: {'ok' if self.ok else 'FAILED'}", "  gluings:"]
        for w in self.gluings:
            lines.append(f"    m={w.m:<3d} twos at {w.twos} gap {w.gap} z in X: {w.z_in}")
        lines.append("  order tests: " + " ".join(f"{n}:{'T' if v else 'F'}"
                                                  for n, v in self.order_tests.items()))
        lines.append(f"  (E, sigma^2) on 2-blocks is the full 4-shift: {self.recoding_is_full}")
        lines.append("  mistake minima: " + " ".join(f"n={n}:{v}" for n, v in self.mistake_minima.items()))
        if self.exhaustive_n2 is not None:
            lines.append(f"  exhaustive n=2: {self.exhaustive_n2}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = [("gluing", w.m, w.gap, int(w.z_in)) for w in self.gluings]
        rows += [("mistake", n, v, int(v >= n)) for n, v in self.mistake_minima.items()]
        return csv_text(["kind", "parameter", "value", "flag"], rows)


def alternating_pattern(n: int) -> tuple[int, ...]:
    """``(02)^n (20)^n``."""
    return (0, 2) * n + (2, 0) * n


def counterexample_suite(m_max: int = 10, n_max: int = 8, order_range: tuple[int, int] = (3, 12),
                         exhaustive: bool = True) -> CounterexampleSuite:
    """Run every check on the non-shadowing counterexample."""
    if m_max < 1 or n_max < 2:
        raise DomainError("need m_max >= 1 and n_max >= 2")
    X = counterexample_x()
    gl = [counterexample_gluing(m) for m in range(1, m_max + 1)]
    orders = {n: sft_order_test(X, n) for n in range(order_range[0], order_range[1] + 1)}
    rec, _ = power_recoding(counterexample_e(), 2)
    full = rec.safety.is_universal() and rec.alphabet.size == 4
    minima = {n: min_mistake_profile(X, alternating_pattern(n)) for n in range(2, n_max + 1)}
    ex = min_mistake_exhaustive(X, alternating_pattern(2)) if exhaustive else None
    a = Alphabet.range(3)
    checks = []
    for n in (2, 4, 6):
        q = SpecQuery((UPPoint(a, (), (0, 2)), UPPoint(a, (), (2, 0))), 2 * n, grid(0), 0)
        r = modified_almost_spec_check(X, q)
        checks.append({"block": 2 * n, "budget": 0, "found": r.found,
                       "tag": getattr(r, "tag", "witness")})
    return CounterexampleSuite(gl, orders, full, minima, ex, checks)


__all__ = [
    "PseudoOrbit", "TracingResult", "random_point_from", "random_pseudo_orbit", "break_seam", "min_trace_m", "trace_sft", "composite_tracing_check", "glue",
    "GluingWitness", "counterexample_gluing", "even_aligned_control", "SpecQuery", "SpecWitness",
    "NoWitness", "modified_almost_spec_check", "min_mistake_profile", "min_mistake_exhaustive",
    "PatternResult", "weak_spec_pattern_search", "alternating_pattern", "CounterexampleSuite",
    "counterexample_suite",
]
