"""Alphabets, words, ultimately periodic points and sliding block codes.

Letters are stored as integer indices into an :class:`Alphabet`; symbols are
only used for parsing and printing. Every type here is an immutable value.

The shift metric is ``d(x, y) = exp(-min{i : x_i != y_i})`` on one-sided
sequences, so distances live on the grid ``{exp(-k)}`` and a strict ball
``d(x, y) < exp(-k)`` is the same as agreement on coordinates ``0..k``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

from .errors import DomainError, ResourceError

log = logging.getLogger(__name__)

#: Largest rule table a :class:`BlockCode` will materialize.
MAX_TABLE = 1 << 22


# ---------------------------------------------------------------------------
# grid


@lru_cache(maxsize=None)
def grid(k: int) -> float:
    """Return the grid value ``exp(-k)``; cached so equal k give identical floats."""
    return math.exp(-k)


def grid_index(eps: float, *, tol: float = 1e-9) -> int:
    """Map a radius to the coordinate depth of its strict ball.

    ``d(x, y) < eps`` holds iff x and y agree on coordinates ``0..k`` where
    ``k = floor(-log eps)``. Grid inputs ``exp(-k)`` return k exactly. Radii
    above 1 give ``-1`` (no constraint).

    Examples
    --------
    >>> grid_index(grid(3))
    3
    >>> grid_index(0.9)
    0
    """
    if not eps > 0:
        raise DomainError(f"radius must be positive, got {eps}")
    t = -math.log(eps)
    k = math.floor(t + tol)
    if abs(t - round(t)) > tol:
        log.info("radius %g is off the grid; using depth %d", eps, k)
    return max(k, -1)


# ---------------------------------------------------------------------------
# alphabet and words


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite list of distinct symbols."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        syms = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", syms)
        if len(syms) == 0:
            raise DomainError("alphabet must have at least one symbol")
        if len(set(syms)) != len(syms):
            raise DomainError(f"duplicate symbols in alphabet {syms}")
        if any(s == "" or "(" in s or ")" in s for s in syms):
            raise DomainError("symbols must be nonempty and contain no parentheses")

    @classmethod
    def of(cls, symbols: Iterable) -> "Alphabet":
        return cls(tuple(str(s) for s in symbols))

    @classmethod
    def range(cls, n: int) -> "Alphabet":
        """The alphabet ``{0, 1, ..., n-1}``."""
        return cls(tuple(str(i) for i in range(n)))

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._lookup[symbol]
        except KeyError:
            raise DomainError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None

    @property
    def _lookup(self) -> dict[str, int]:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {s: i for i, s in enumerate(self.symbols)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache

    def tokenize(self, text: str) -> tuple[int, ...]:
        """Split ``text`` into letters by greedy longest match.

        A comma-separated form ``"a,b,c"`` is also accepted, which is needed
        only when symbols are ambiguous as a concatenation.
        """
        if "," in text:
            return tuple(self.index(t.strip()) for t in text.split(",") if t.strip())
        out = []
        i = 0
        widths = sorted({len(s) for s in self.symbols}, reverse=True)
        while i < len(text):
            for w in widths:
                tok = text[i:i + w]
                if tok in self._lookup:
                    out.append(self._lookup[tok])
                    i += w
                    break
            else:
                raise DomainError(f"cannot parse {text!r} over alphabet {self.symbols}")
        return tuple(out)

    def render(self, letters: Iterable[int]) -> str:
        syms = [self.symbols[a] for a in letters]
        if all(len(s) == 1 for s in self.symbols):
            return "".join(syms)
        return ",".join(syms)

    def to_json(self) -> list[str]:
        return list(self.symbols)


def _check_same(a: Alphabet, b: Alphabet) -> None:
    if a != b:
        raise DomainError(f"alphabet mismatch: {a.symbols} vs {b.symbols}")


@dataclass(frozen=True)
class Word:
    """A finite word over an alphabet, stored as letter indices."""

    alphabet: Alphabet
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        letters = tuple(int(a) for a in self.letters)
        object.__setattr__(self, "letters", letters)
        n = self.alphabet.size
        for a in letters:
            if not 0 <= a < n:
                raise DomainError(f"letter {a} outside alphabet of size {n}")

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> "Word":
        return cls(alphabet, alphabet.tokenize(text))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __getitem__(self, i: int) -> int:
        return self.letters[i]

    def __str__(self) -> str:
        return self.alphabet.render(self.letters)

    def concat(self, other: "Word") -> "Word":
        _check_same(self.alphabet, other.alphabet)
        return Word(self.alphabet, self.letters + other.letters)

    __add__ = concat

    def power(self, n: int) -> "Word":
        if n < 0:
            raise DomainError(f"power must be nonnegative, got {n}")
        return Word(self.alphabet, self.letters * n)

    def slice(self, start: int, stop: int) -> "Word":
        if not 0 <= start <= stop <= len(self):
            raise DomainError(f"slice [{start}:{stop}] out of range for length {len(self)}")
        return Word(self.alphabet, self.letters[start:stop])

    def occurrences(self, u: "Word") -> list[int]:
        """All (possibly overlapping) start positions of ``u`` in this word."""
        _check_same(self.alphabet, u.alphabet)
        m = len(u)
        if m == 0:
            return list(range(len(self) + 1))
        return [i for i in range(len(self) - m + 1) if self.letters[i:i + m] == u.letters]

    def count(self, u: "Word") -> int:
        return len(self.occurrences(u))


def power(word: Word, n: int) -> Word:
    return word.power(n)


def concat(*words: Word) -> Word:
    if not words:
        raise DomainError("concat needs at least one word")
    out = words[0]
    for w in words[1:]:
        out = out.concat(w)
    return out


def occurrences(u: Word, v: Word) -> int:
    """Number of overlapping occurrences of ``u`` inside ``v``.

    Examples
    --------
    >>> A = Alphabet.range(2)
    >>> occurrences(Word.parse(A, "11"), Word.parse(A, "0110111"))
    3
    """
    return v.count(u)


# ---------------------------------------------------------------------------
# ultimately periodic points


def _primitive_root(cycle: tuple[int, ...]) -> tuple[int, ...]:
    n = len(cycle)
    for p in range(1, n + 1):
        if n % p == 0 and cycle[:p] * (n // p) == cycle:
            return cycle[:p]
    return cycle


def _canonical(pre: tuple[int, ...], cyc: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    cyc = _primitive_root(cyc)
    while pre and pre[-1] == cyc[-1]:
        pre = pre[:-1]
        cyc = cyc[-1:] + cyc[:-1]
    return pre, cyc


@dataclass(frozen=True)
class UPPoint:
    """The one-sided sequence ``preperiod . cycle^inf``, kept in canonical form.

    Canonical form uses a primitive cycle and the shortest possible
    preperiod, so two points are equal iff their fields are equal.

    Examples
    --------
    >>> A = Alphabet.range(2)
    >>> str(UPPoint.parse(A, "0101(01)"))
    '(01)'
    """

    alphabet: Alphabet
    preperiod: tuple[int, ...]
    cycle: tuple[int, ...]

    def __post_init__(self):
        pre = tuple(int(a) for a in self.preperiod)
        cyc = tuple(int(a) for a in self.cycle)
        if not cyc:
            raise DomainError("cycle must be nonempty")
        n = self.alphabet.size
        if any(not 0 <= a < n for a in pre + cyc):
            raise DomainError("letter outside alphabet")
        pre, cyc = _canonical(pre, cyc)
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "cycle", cyc)

    @classmethod
    def of(cls, alphabet: Alphabet, preperiod: Word | Sequence[int], cycle: Word | Sequence[int]) -> "UPPoint":
        p = preperiod.letters if isinstance(preperiod, Word) else tuple(preperiod)
        c = cycle.letters if isinstance(cycle, Word) else tuple(cycle)
        return cls(alphabet, p, c)

    @classmethod
    def periodic(cls, word: Word) -> "UPPoint":
        return cls(word.alphabet, (), word.letters)

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> "UPPoint":
        text = text.strip()
        if not text.endswith(")") or text.count("(") != 1:
            raise DomainError(f"expected 'prefix(cycle)', got {text!r}")
        head, cyc = text[:-1].split("(")
        return cls(alphabet, alphabet.tokenize(head), alphabet.tokenize(cyc))

    def __str__(self) -> str:
        return f"{self.alphabet.render(self.preperiod)}({self.alphabet.render(self.cycle)})"

    @property
    def period(self) -> int:
        return len(self.cycle)

    @property
    def is_periodic(self) -> bool:
        return not self.preperiod

    def at(self, i: int) -> int:
        if i < 0:
            raise DomainError(f"negative coordinate {i}")
        p = len(self.preperiod)
        if i < p:
            return self.preperiod[i]
        return self.cycle[(i - p) % len(self.cycle)]

    def prefix(self, n: int) -> tuple[int, ...]:
        return self.window(0, n)

    def prefix_word(self, n: int) -> Word:
        return Word(self.alphabet, self.prefix(n))

    def window(self, start: int, length: int) -> tuple[int, ...]:
        if start < 0:
            raise DomainError(f"negative coordinate {start}")
        pre, cyc = self.preperiod, self.cycle
        head = pre[start:start + length]
        need = length - len(head)
        if need <= 0:
            return head
        i = max(start - len(pre), 0) % len(cyc)
        tiled = cyc * ((i + need) // len(cyc) + 1)
        return head + tiled[i:i + need]

    def shift(self, n: int = 1) -> "UPPoint":
        if n < 0:
            raise DomainError("shift amount must be nonnegative")
        p = len(self.preperiod)
        if n <= p:
            return UPPoint(self.alphabet, self.preperiod[n:], self.cycle)
        r = (n - p) % len(self.cycle)
        return UPPoint(self.alphabet, (), self.cycle[r:] + self.cycle[:r])

    def horizon(self, other: "UPPoint") -> int:
        """A length past which agreement of the two points is automatic."""
        return max(len(self.preperiod), len(other.preperiod)) + math.lcm(len(self.cycle), len(other.cycle))

    def first_difference(self, other: "UPPoint") -> int | None:
        _check_same(self.alphabet, other.alphabet)
        if self == other:
            return None
        for i in range(self.horizon(other)):
            if self.at(i) != other.at(i):
                return i
        return None  # pragma: no cover - canonical forms make this unreachable

    def orbit(self) -> list["UPPoint"]:
        """Distinct points of the forward orbit, in order."""
        out = []
        seen = set()
        x = self
        while x not in seen:
            seen.add(x)
            out.append(x)
            x = x.shift()
        return out


@dataclass(frozen=True)
class Cylinder:
    """The cylinder set of all sequences starting with ``prefix``."""

    alphabet: Alphabet
    prefix: tuple[int, ...]

    def __post_init__(self):
        pre = tuple(int(a) for a in self.prefix)
        if not pre:
            raise DomainError("cylinder prefix must be nonempty")
        if any(not 0 <= a < self.alphabet.size for a in pre):
            raise DomainError("letter outside alphabet")
        object.__setattr__(self, "prefix", pre)

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> "Cylinder":
        return cls(alphabet, alphabet.tokenize(text))

    def __len__(self) -> int:
        return len(self.prefix)

    def __str__(self) -> str:
        return f"[{self.alphabet.render(self.prefix)}]"

    def contains(self, x: UPPoint) -> bool:
        _check_same(self.alphabet, x.alphabet)
        return x.prefix(len(self.prefix)) == self.prefix


# ---------------------------------------------------------------------------
# metric


def shift_distance(x: UPPoint, y: UPPoint) -> float:
    """Shift-metric distance ``exp(-min{i : x_i != y_i})``.

    Examples
    --------
    >>> A = Alphabet.range(2)
    >>> round(shift_distance(UPPoint.parse(A, "01(0)"), UPPoint.parse(A, "01(1)")), 6)
    0.135335
    """
    i = x.first_difference(y)
    return 0.0 if i is None else grid(i)


def bowen_distance(x: UPPoint, y: UPPoint, n: int) -> float:
    """``d_n(x, y) = max_{0 <= j < n} d(sigma^j x, sigma^j y)``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    i = x.first_difference(y)
    if i is None:
        return 0.0
    best = 0.0
    for j in range(n):
        k = x.shift(j).first_difference(y.shift(j))
        if k is not None:
            best = max(best, grid(k))
    return best


def agree(x: UPPoint, y: UPPoint, start: int, stop: int) -> bool:
    """True iff ``x_i == y_i`` for ``start <= i < stop``."""
    return all(x.at(i) == y.at(i) for i in range(start, stop))


# ---------------------------------------------------------------------------
# block codes


def encode(block: Sequence[int], base: int) -> int:
    v = 0
    for a in block:
        v = v * base + a
    return v


def decode(v: int, base: int, length: int) -> tuple[int, ...]:
    out = [0] * length
    for i in range(length - 1, -1, -1):
        v, out[i] = divmod(v, base)
    return tuple(out)


@dataclass(frozen=True)
class BlockCode:
    """Sliding block code ``y_i = rule(x[s*i : s*i + w])``.

    ``step`` (written s) is 1 for ordinary shift-commuting codes. A code with
    step s intertwines ``sigma^s`` on the source with ``sigma`` on the
    target, which is how factor maps ``pi o f^N = sigma o pi`` are written
    when ``f`` is a power of the shift.

    Parameters
    ----------
    source, target : Alphabet
    window : int
        Window length ``w >= 1``.
    table : tuple of int
        Target letter for each source block, indexed by the base-``|source|``
        big-endian encoding of the block.
    step : int
        Stride ``s >= 1``.

    Examples
    --------
    >>> A, B = Alphabet.range(4), Alphabet.range(2)
    >>> pi = BlockCode.from_function(A, B, 1, lambda b: b[0] // 2)
    >>> str(pi.apply(UPPoint.parse(A, "(0123)")))
    '(0011)'
    """

    source: Alphabet
    target: Alphabet
    window: int
    table: tuple[int, ...]
    step: int = 1

    def __post_init__(self):
        if self.window < 1 or self.step < 1:
            raise DomainError("window and step must be >= 1")
        table = tuple(int(a) for a in self.table)
        if len(table) != self.source.size ** self.window:
            raise DomainError(
                f"rule table has {len(table)} entries, expected {self.source.size ** self.window}")
        if any(not 0 <= a < self.target.size for a in table):
            raise DomainError("rule output outside target alphabet")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_function(cls, source: Alphabet, target: Alphabet, window: int,
                      rule: Callable[[tuple[int, ...]], int], step: int = 1) -> "BlockCode":
        size = source.size ** window
        if size > MAX_TABLE:
            raise ResourceError(f"rule table of size {size} exceeds {MAX_TABLE}",
                                resource="table", limit=MAX_TABLE, observed=size)
        table = tuple(rule(b) for b in itertools.product(range(source.size), repeat=window))
        return cls(source, target, window, table, step)

    @classmethod
    def from_mapping(cls, source: Alphabet, target: Alphabet, mapping: dict[str, str],
                     step: int = 1) -> "BlockCode":
        """Build from a symbol-level table ``{"00": "a", ...}``; must be total."""
        if not mapping:
            raise DomainError("empty rule mapping")
        parsed = {source.tokenize(k): target.index(v) for k, v in mapping.items()}
        widths = {len(k) for k in parsed}
        if len(widths) != 1:
            raise DomainError("rule keys must all have the same length")
        w = widths.pop()
        missing = [b for b in itertools.product(range(source.size), repeat=w) if b not in parsed]
        if missing:
            raise DomainError(f"rule is not total; missing {source.render(missing[0])}")
        return cls.from_function(source, target, w, lambda b: parsed[b], step)

    @classmethod
    def identity(cls, alphabet: Alphabet) -> "BlockCode":
        return cls(alphabet, alphabet, 1, tuple(range(alphabet.size)))

    def local(self, block: Sequence[int]) -> int:
        return self.table[encode(block, self.source.size)]

    def apply(self, x: UPPoint) -> UPPoint:
        """Image of an ultimately periodic point; again ultimately periodic."""
        return slide(self, x)

    def apply_word(self, word: Word) -> Word:
        """Image of a finite word: all complete windows, stepping by ``step``."""
        _check_same(self.source, word.alphabet)
        n, s, w = len(word), self.step, self.window
        count = 0 if n < w else (n - w) // s + 1
        return Word(self.target, tuple(self.local(word.letters[s * i:s * i + w]) for i in range(count)))

    def compose(self, inner: "BlockCode") -> "BlockCode":
        """The code ``self o inner``."""
        _check_same(inner.target, self.source)
        s_in, w_in = inner.step, inner.window
        window = s_in * (self.window - 1) + w_in
        step = s_in * self.step

        def rule(block: tuple[int, ...]) -> int:
            mid = tuple(inner.local(block[s_in * j:s_in * j + w_in]) for j in range(self.window))
            return self.local(mid)

        return BlockCode.from_function(inner.source, self.target, window, rule, step)

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "window": self.window,
            "step": self.step,
            "rule": {self.source.render(decode(i, self.source.size, self.window)): self.target.symbols[a]
                     for i, a in enumerate(self.table)},
        }

    @classmethod
    def from_json(cls, data: dict) -> "BlockCode":
        src = Alphabet.of(data["source"])
        tgt = Alphabet.of(data["target"])
        return cls.from_mapping(src, tgt, data["rule"], int(data.get("step", 1)))


def slide(rule, x: UPPoint) -> UPPoint:
    """Apply anything with ``local``, ``window``, ``step``, ``source``, ``target`` to x."""
    _check_same(rule.source, x.alphabet)
    s, w = rule.step, rule.window
    p, c = len(x.preperiod), len(x.cycle)
    i0 = -(-p // s)
    period = c // math.gcd(c, s)
    ys = [rule.local(x.window(s * i, w)) for i in range(i0 + period)]
    return UPPoint(rule.target, tuple(ys[:i0]), tuple(ys[i0:]))


def apply_block_code(code: BlockCode, x: UPPoint) -> UPPoint:
    return code.apply(x)


def all_words(alphabet: Alphabet, n: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(alphabet.size), repeat=n)


__all__ = [
    "Alphabet", "Word", "UPPoint", "Cylinder", "BlockCode",
    "grid", "grid_index", "shift_distance", "bowen_distance", "agree",
    "apply_block_code", "slide", "power", "concat", "occurrences", "all_words", "encode", "decode",
]
