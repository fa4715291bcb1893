"""Subshift presentations, languages and the SFT-order test.

Every presentation compiles to a canonical :class:`~semihorse.safety.SafetySet`
whose points are exactly the one-sided points of the subshift. Since all
families here are shift-invariant, the admissible length-n words (factors)
coincide with the length-n prefixes of that automaton, and counting and
enumeration are dynamic programs over it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import mpmath

from .errors import DomainError
from .safety import SafetySet, code_image, explore, shift_image, union
from .symcore import Alphabet, BlockCode, Word

KINDS = ("full", "sft", "sofic", "beta", "sgap", "counterexample-x", "counterexample-e", "automaton")


@dataclass(frozen=True)
class SubshiftPresentation:
    """An alphabet plus one way of describing a one-sided subshift.

    Only the fields relevant to ``kind`` are set. ``automaton`` holds a
    ready-made canonical set (used for recodings and derived systems).
    """

    alphabet: Alphabet
    kind: str
    forbidden: tuple[tuple[int, ...], ...] = ()
    graph: tuple[tuple[int, int, int], ...] = ()
    beta: float | None = None
    depth: int | None = None
    gaps: tuple[int, ...] | None = None
    gap_progression: tuple[int, int] | None = None
    automaton: SafetySet | None = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown subshift kind {self.kind!r}")

    # --------------------------------------------------------------------

    @property
    def order(self) -> int:
        """Window length of the forbidden words (SFT kind only).

        An SFT with longest forbidden word of length r is determined by
        its admissible r-words, which is the convention used by
        :func:`sft_order_test` and :func:`~semihorse.shadowspec.trace_sft`.
        """
        if self.kind == "full":
            return 1
        if self.kind != "sft":
            raise DomainError("order is defined for SFT presentations only")
        return max((len(w) for w in self.forbidden), default=1)

    @cached_property
    def safety(self) -> SafetySet:
        return _compile(self)

    @property
    def is_empty(self) -> bool:
        return self.safety.is_empty()

    def accepts(self, word: Sequence[int] | Word) -> bool:
        return self.safety.accepts(word)

    def language(self, n: int) -> list[tuple[int, ...]]:
        return language(self, n)

    def count(self, n: int) -> int:
        self._check_depth(n)
        return self.safety.count(n)

    def _check_depth(self, n: int) -> None:
        if n < 0:
            raise DomainError("length must be nonnegative")
        if self.kind == "beta" and self._beta_expansion[1] is False and n > self.depth:
            raise DomainError(f"beta-shift truncated at depth {self.depth}; requested length {n}")

    @cached_property
    def _beta_expansion(self) -> tuple[tuple[int, ...], bool]:
        return quasi_greedy_expansion(self.beta, self.depth)

    def to_json(self) -> dict:
        d: dict = {"type": self.kind, "alphabet": self.alphabet.to_json()}
        a = self.alphabet
        if self.kind == "sft":
            d["forbidden"] = [a.render(w) for w in self.forbidden]
        elif self.kind == "sofic":
            n = 1 + max(max(u, v) for u, _, v in self.graph)
            d["graph"] = {"states": n, "edges": [[u, a.symbols[x], v] for u, x, v in self.graph]}
        elif self.kind == "beta":
            d.update(beta=self.beta, depth=self.depth)
        elif self.kind == "sgap":
            if self.gaps is not None:
                d["gaps"] = list(self.gaps)
            else:
                d["gaps"] = {"start": self.gap_progression[0], "step": self.gap_progression[1]}
        elif self.kind == "automaton":
            d["automaton"] = self.automaton.to_json()
        return d


# ---------------------------------------------------------------------------
# constructors


def full_shift(k: int | Alphabet) -> SubshiftPresentation:
    a = k if isinstance(k, Alphabet) else Alphabet.range(k)
    return SubshiftPresentation(a, "full", name=f"full-{a.size}")


def sft(alphabet: Alphabet, forbidden: Iterable[Sequence[int] | str]) -> SubshiftPresentation:
    words = []
    for w in forbidden:
        t = alphabet.tokenize(w) if isinstance(w, str) else tuple(w)
        if not t:
            raise DomainError("forbidden words must be nonempty")
        words.append(t)
    x = SubshiftPresentation(alphabet, "sft", forbidden=tuple(sorted(set(words))), name="sft")
    if x.safety.is_empty():
        raise DomainError("forbidden list leaves an empty subshift")
    return x


def golden_mean() -> SubshiftPresentation:
    x = sft(Alphabet.range(2), ["11"])
    return SubshiftPresentation(x.alphabet, "sft", forbidden=x.forbidden, name="golden-mean")


def sofic(alphabet: Alphabet, edges: Iterable[tuple[int, int | str, int]]) -> SubshiftPresentation:
    """Labeled graph presentation; edges are ``(src, label, dst)``."""
    es = []
    for u, x, v in edges:
        lab = alphabet.index(x) if isinstance(x, str) else int(x)
        if not 0 <= lab < alphabet.size:
            raise DomainError(f"edge label {x!r} outside alphabet")
        es.append((int(u), lab, int(v)))
    if not es:
        raise DomainError("sofic graph has no edges")
    return SubshiftPresentation(alphabet, "sofic", graph=tuple(es), name="sofic")


def beta_shift(beta: float, depth: int = 32) -> SubshiftPresentation:
    if not beta > 1:
        raise DomainError(f"beta must exceed 1, got {beta}")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    k = math.ceil(beta)
    return SubshiftPresentation(Alphabet.range(k), "beta", beta=float(beta), depth=int(depth),
                                name=f"beta-{beta}")


def sgap(gaps: Iterable[int] | None = None, *, start: int | None = None,
         step: int | None = None) -> SubshiftPresentation:
    """S-gap shift: gaps of zeros between consecutive ones must lie in S.

    S is either a finite set ``gaps`` or the progression
    ``{start + step*i : i >= 0}``.
    """
    a = Alphabet.range(2)
    if gaps is not None:
        s = tuple(sorted(set(int(g) for g in gaps)))
        if not s or s[0] < 0:
            raise DomainError("S must be a nonempty set of nonnegative integers")
        return SubshiftPresentation(a, "sgap", gaps=s, name=f"sgap-{list(s)}")
    if start is None or step is None or start < 0 or step < 1:
        raise DomainError("arithmetic S needs start >= 0 and step >= 1")
    return SubshiftPresentation(a, "sgap", gap_progression=(int(start), int(step)),
                                name=f"sgap-{start}+{step}N")


COUNTEREXAMPLE_BLOCKS = ((0, 0), (0, 1), (1, 0), (0, 2))


def counterexample_e() -> SubshiftPresentation:
    """Concatenations of the blocks 00, 01, 10, 02 aligned at even positions."""
    return SubshiftPresentation(Alphabet.range(3), "counterexample-e", name="counterexample-e")


def counterexample_x() -> SubshiftPresentation:
    """The union of the block system and its shift; a subshift without shadowing."""
    return SubshiftPresentation(Alphabet.range(3), "counterexample-x", name="counterexample-x")


def from_automaton(s: SafetySet, name: str = "automaton") -> SubshiftPresentation:
    return SubshiftPresentation(s.alphabet, "automaton", automaton=s, name=name)


def family(name: str, **params) -> SubshiftPresentation:
    """Named constructors: full, golden-mean, beta, sgap, counterexample-x/e."""
    if name == "full":
        return full_shift(int(params.get("k", 2)))
    if name == "golden-mean":
        return golden_mean()
    if name == "beta":
        return beta_shift(float(params["beta"]), int(params.get("depth", 32)))
    if name == "sgap":
        if "gaps" in params:
            return sgap(params["gaps"])
        return sgap(start=params.get("start"), step=params.get("step"))
    if name == "counterexample-x":
        return counterexample_x()
    if name == "counterexample-e":
        return counterexample_e()
    raise DomainError(f"unknown family {name!r}")


def from_description(desc: dict) -> SubshiftPresentation:
    """Build from the system-description dictionary (see the CLI schema)."""
    kind = desc.get("type")
    if kind == "golden-mean":
        return golden_mean()
    if kind == "full":
        if "alphabet" in desc:
            return full_shift(Alphabet.of(desc["alphabet"]))
        return full_shift(int(desc.get("k", 2)))
    if kind == "sft":
        a = Alphabet.of(desc["alphabet"])
        return sft(a, desc.get("forbidden", []))
    if kind == "sofic":
        a = Alphabet.of(desc["alphabet"])
        g = desc.get("graph") or {}
        return sofic(a, [tuple(e) for e in g.get("edges", [])])
    if kind == "beta":
        return beta_shift(float(desc["beta"]), int(desc.get("depth", 32)))
    if kind == "sgap":
        g = desc.get("gaps")
        if isinstance(g, dict):
            return sgap(start=g.get("start"), step=g.get("step"))
        return sgap(g)
    if kind == "counterexample-x":
        return counterexample_x()
    if kind == "counterexample-e":
        return counterexample_e()
    if kind == "automaton":
        return from_automaton(SafetySet.from_json(desc["automaton"]))
    raise DomainError(f"unknown system type {kind!r}")


# ---------------------------------------------------------------------------
# beta expansions


def quasi_greedy_expansion(beta: float, depth: int, *, dps: int = 60,
                           snap: float = 1e-12) -> tuple[tuple[int, ...], bool]:
    """Digits of the quasi-greedy beta-expansion of 1.

    Returns ``(digits, periodic)``. When the greedy expansion is finite the
    quasi-greedy one is purely periodic and ``digits`` is one full period;
    otherwise ``digits`` holds the first ``depth`` digits. Remainders below
    ``snap`` count as zero, since ``beta`` usually arrives as a double.
    """
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        r = mpmath.mpf(1)
        tol = mpmath.mpf(snap)
        digits: list[int] = []
        for _ in range(depth):
            v = b * r
            d = int(mpmath.floor(v + tol))
            r = v - d
            if abs(r) < tol:
                digits.append(d)
                period = tuple(digits[:-1]) + (digits[-1] - 1,)
                return period, True
            digits.append(d)
    return tuple(digits), False


# ---------------------------------------------------------------------------
# compilation to safety automata


def _compile(x: SubshiftPresentation) -> SafetySet:
    a = x.alphabet
    k = a.size
    if x.kind == "full":
        return SafetySet.full(a)
    if x.kind == "automaton":
        return x.automaton
    if x.kind == "sft":
        forb = set(x.forbidden)
        r = x.order
        lengths = sorted({len(w) for w in forb})

        def succ(buf, c):
            nb = buf + (c,)
            for m in lengths:
                if m <= len(nb) and nb[-m:] in forb:
                    return None
            return nb[-(r - 1):] if r > 1 else ()

        return explore(a, (), succ)
    if x.kind == "sofic":
        out: dict[int, list[list[int]]] = {}
        nodes = set()
        for u, lab, v in x.graph:
            nodes.update((u, v))
            out.setdefault(u, [[] for _ in range(k)])[lab].append(v)

        def succ(ss, c):
            nxt = frozenset(v for u in ss for v in out.get(u, [[]] * k)[c])
            return nxt or None

        return explore(a, frozenset(nodes), succ)
    if x.kind == "beta":
        t, periodic = x._beta_expansion
        n = len(t)

        def succ(j, c):
            if c < t[j]:
                return 0
            if c == t[j]:
                return (j + 1) % n
            return None

        return explore(a, 0, succ)
    if x.kind == "sgap":
        if x.gaps is not None:
            gs = set(x.gaps)
            top = max(gs)

            def norm(c):
                return c if c <= top else None

            def ok(c):
                return c in gs
        else:
            s0, st = x.gap_progression

            def norm(c):
                return c if c < s0 else s0 + (c - s0) % st

            def ok(c):
                return c >= s0 and (c - s0) % st == 0

        def succ(state, c):
            phase, cnt = state
            if c == 0:
                m = norm(cnt + 1)
                return None if m is None else (phase, m)
            if phase == "in" and not ok(cnt):
                return None
            return ("in", 0)

        return explore(a, ("pre", 0), succ)
    if x.kind in ("counterexample-e", "counterexample-x"):
        e = SafetySet.block_pattern(a, [COUNTEREXAMPLE_BLOCKS])
        if x.kind == "counterexample-e":
            return e
        return union(e, shift_image(e, 1))
    raise DomainError(f"cannot compile kind {x.kind!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# languages


@dataclass
class LanguageTable:
    """Exact counts ``|L_n|`` (and optionally the words) for computed n."""

    subshift: SubshiftPresentation
    counts: dict[int, int] = field(default_factory=dict)
    words: dict[int, list[tuple[int, ...]]] = field(default_factory=dict)

    def count(self, n: int) -> int:
        if n not in self.counts:
            self.counts[n] = self.subshift.count(n)
        return self.counts[n]

    def materialize(self, n: int) -> list[tuple[int, ...]]:
        if n not in self.words:
            self.words[n] = language(self.subshift, n)
            self.counts[n] = len(self.words[n])
        return self.words[n]

    @property
    def degenerate(self) -> bool:
        return self.subshift.is_empty


def language(x: SubshiftPresentation, n: int) -> list[tuple[int, ...]]:
    """Admissible words of length n, in lexicographic order.

    Examples
    --------
    >>> [''.join(map(str, w)) for w in language(golden_mean(), 3)]
    ['000', '001', '010', '100', '101']
    """
    x._check_depth(n)
    return x.safety.words(n)


def language_table(x: SubshiftPresentation, ns: Iterable[int]) -> LanguageTable:
    t = LanguageTable(x)
    for n in ns:
        t.count(n)
    return t


def sft_from_allowed(alphabet: Alphabet, allowed: Iterable[Sequence[int]], n: int) -> SafetySet:
    """The one-sided SFT whose admissible n-words are exactly ``allowed``."""
    allow = {tuple(w) for w in allowed}
    if any(len(w) != n for w in allow):
        raise DomainError("allowed words must all have length n")

    def succ(buf, c):
        nb = buf + (c,)
        if len(nb) >= n:
            if nb[-n:] not in allow:
                return None
            return nb[-(n - 1):] if n > 1 else ()
        return nb

    return explore(alphabet, (), succ)


def sft_order_test(x: SubshiftPresentation, n: int) -> bool:
    """Whether ``x`` equals the SFT generated by its own admissible n-words."""
    if n < 1:
        raise DomainError("order must be >= 1")
    return sft_from_allowed(x.alphabet, language(x, n), n) == x.safety


@dataclass(frozen=True)
class ShadowingVerdict:
    """Either ``order`` is the least passing n, or no order up to ``max_order`` passed.

    A negative verdict is bounded evidence only: failing every order up to
    a bound does not prove that no larger order works.
    """

    has_shadowing: bool
    order: int | None
    max_order: int

    def __str__(self) -> str:
        if self.has_shadowing:
            return f"HasShadowing({self.order})"
        return f"NoShadowingUpTo({self.max_order})"


def shadowing_verdict(x: SubshiftPresentation, max_order: int) -> ShadowingVerdict:
    if max_order < 1:
        raise DomainError("max_order must be >= 1")
    for n in range(1, max_order + 1):
        if sft_order_test(x, n):
            return ShadowingVerdict(True, n, max_order)
    return ShadowingVerdict(False, None, max_order)


# ---------------------------------------------------------------------------
# recodings


def block_alphabet(words: Sequence[tuple[int, ...]], base: Alphabet) -> Alphabet:
    return Alphabet(tuple(base.render(w) if len(w) else "e" for w in words))


def power_recoding(x: SubshiftPresentation, k: int) -> tuple[SubshiftPresentation, BlockCode]:
    """The system ``(X, sigma^k)`` written over the alphabet of its k-blocks.

    Returns the recoded presentation and the stride-k code that realizes it.
    The new alphabet consists of the length-k prefixes of points of X.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    words = x.safety.words(k)
    target = block_alphabet(words, x.alphabet)
    index = {w: i for i, w in enumerate(words)}
    code = BlockCode.from_function(x.alphabet, target, k, lambda b: index.get(b, 0), step=k)
    img = code_image(x.safety, code)
    return from_automaton(img, name=f"{x.name or x.kind}^[{k}]"), code


def higher_block_presentation(x: SubshiftPresentation, k: int) -> SubshiftPresentation:
    """Overlapping k-block presentation (conjugate to X, same entropy)."""
    words = x.safety.words(k)
    target = block_alphabet(words, x.alphabet)
    index = {w: i for i, w in enumerate(words)}
    code = BlockCode.from_function(x.alphabet, target, k, lambda b: index.get(b, 0))
    return from_automaton(code_image(x.safety, code), name=f"{x.name or x.kind}<{k}>")


# ---------------------------------------------------------------------------
# graphs


def transition_matrix(s: SafetySet):
    """Adjacency matrix (edge multiplicities) of a canonical automaton."""
    import numpy as np

    n = s.n_states
    m = np.zeros((n, n), dtype=float)
    for q, row in enumerate(s.delta):
        for t in row:
            if t >= 0:
                m[q, t] += 1
    return m


def sft_vertex_graph(x: SubshiftPresentation):
    """Vertex graph on admissible (r-1)-words of an SFT of order r.

    Returns the list of vertices and the 0/1 adjacency matrix restricted to
    vertices that lie on bi-infinite paths.
    """
    import numpy as np

    r = max(x.order, 2)
    verts = [w for w in x.safety.words(r - 1)]
    idx = {w: i for i, w in enumerate(verts)}
    allowed = set(x.safety.words(r))
    m = np.zeros((len(verts), len(verts)), dtype=np.int64)
    for w in allowed:
        if w[:-1] in idx and w[1:] in idx:
            m[idx[w[:-1]], idx[w[1:]]] = 1
    keep = np.ones(len(verts), dtype=bool)
    while True:
        sub = m[np.ix_(keep, keep)]
        good = (sub.sum(axis=0) > 0) & (sub.sum(axis=1) > 0)
        if good.all():
            break
        ids = np.flatnonzero(keep)
        keep[ids[~good]] = False
    ids = np.flatnonzero(keep)
    return [verts[i] for i in ids], m[np.ix_(ids, ids)]


def is_primitive(m) -> bool:
    """Whether a nonnegative square matrix is primitive (Wielandt bound)."""
    import numpy as np

    n = m.shape[0]
    if n == 0:
        return False
    b = (np.asarray(m) > 0).astype(np.int64)
    p = b.copy()
    for _ in range((n - 1) ** 2 + 1):
        if p.all():
            return True
        p = ((p @ b) > 0).astype(np.int64)
    return bool(p.all())


def is_mixing_sft(x: SubshiftPresentation) -> bool:
    if x.kind == "full":
        return True
    _, m = sft_vertex_graph(x)
    return is_primitive(m)


__all__ = [
    "SubshiftPresentation", "LanguageTable", "ShadowingVerdict",
    "full_shift", "sft", "golden_mean", "sofic", "beta_shift", "sgap",
    "counterexample_e", "counterexample_x", "from_automaton", "family", "from_description",
    "language", "language_table", "sft_from_allowed", "sft_order_test", "shadowing_verdict",
    "power_recoding", "higher_block_presentation", "transition_matrix", "sft_vertex_graph",
    "is_primitive", "is_mixing_sft", "quasi_greedy_expansion", "COUNTEREXAMPLE_BLOCKS",
]
