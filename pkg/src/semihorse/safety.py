"""Closed subsets of a one-sided sequence space as safety automata.

A :class:`SafetySet` is a deterministic automaton whose missing transitions
lead to an implicit reject sink. A sequence belongs to the set iff it never
reaches the sink. After construction every automaton is put in canonical
form:

1. keep states reachable from the start;
2. keep live states (those with an infinite continuation);
3. merge equivalent states (Moore partition refinement);
4. renumber states in breadth-first order from the start, letters ascending.

Two sets are therefore equal iff their canonical automata are identical. The
empty set has ``start == -1`` and no states.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Protocol, Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .symcore import Alphabet, Cylinder, UPPoint, Word, _check_same

DEFAULT_MAX_STATES = 10 ** 6


def max_states() -> int:
    """State ceiling: ``SEMIHORSE_MAX_STATES`` if set, else ``10**6``."""
    raw = os.environ.get("SEMIHORSE_MAX_STATES")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise DomainError(f"SEMIHORSE_MAX_STATES must be an integer, got {raw!r}") from None
    return DEFAULT_MAX_STATES


class LocalRule(Protocol):
    """Anything that behaves like a sliding block code."""

    source: Alphabet
    target: Alphabet
    window: int
    step: int

    def local(self, block: Sequence[int]) -> int: ...


Delta = list[list[int]]


# ---------------------------------------------------------------------------
# canonical form


def _trim(delta: np.ndarray) -> np.ndarray:
    """Boolean mask of live states."""
    n, k = delta.shape
    alive = np.ones(n, dtype=bool)
    outdeg = (delta >= 0).sum(axis=1)
    preds: list[list[int]] = [[] for _ in range(n)]
    src, _ = np.nonzero(delta >= 0)
    for s, t in zip(src.tolist(), delta[delta >= 0].tolist()):
        preds[t].append(s)
    queue = deque(np.flatnonzero(outdeg == 0).tolist())
    while queue:
        s = queue.popleft()
        if not alive[s]:
            continue
        alive[s] = False
        for p in preds[s]:
            if alive[p]:
                outdeg[p] -= 1
                if outdeg[p] == 0:
                    queue.append(p)
    return alive


def _quotient(delta: np.ndarray, cls: np.ndarray) -> np.ndarray:
    count = int(cls.max()) + 1 if len(cls) else 0
    rep = np.zeros(count, dtype=np.int64)
    rep[cls] = np.arange(len(cls))
    q = delta[rep]
    return np.where(q >= 0, cls[np.maximum(q, 0)], -1)


def _minimize(delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hopcroft refinement; returns (class of each state, quotient table).

    Rejection is modelled by an explicit sink, so every live state starts in
    one block and the sink in another.
    """
    n, k = delta.shape
    if n == 0:
        return np.zeros(0, dtype=np.int64), delta
    full = np.where(delta >= 0, delta, n)
    # inverse transitions per letter, CSR style
    inv = []
    for a in range(k):
        tgt = np.concatenate([full[:, a], [n]])
        order = np.argsort(tgt, kind="stable")
        starts = np.searchsorted(tgt[order], np.arange(n + 2))
        inv.append((order.tolist(), starts.tolist()))
    block_of = [0] * n + [1]
    blocks: list[set[int]] = [set(range(n)), {n}]
    work = {(1, a) for a in range(k)}
    while work:
        b, a = work.pop()
        order, starts = inv[a]
        touched: dict[int, list[int]] = {}
        for t in blocks[b]:
            for s in order[starts[t]:starts[t + 1]]:
                touched.setdefault(block_of[s], []).append(s)
        for y, members in touched.items():
            if len(members) == len(blocks[y]):
                continue
            z = len(blocks)
            moved = set(members)
            blocks[y] -= moved
            blocks.append(moved)
            for s in moved:
                block_of[s] = z
            for c in range(k):
                if (y, c) in work:
                    work.add((z, c))
                else:
                    work.add((z, c) if len(moved) <= len(blocks[y]) else (y, c))
    # renumber classes of live states densely
    ids: dict[int, int] = {}
    cls = np.array([ids.setdefault(block_of[s], len(ids)) for s in range(n)], dtype=np.int64)
    return cls, _quotient(delta, cls)


def _minimize_moore(delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moore refinement, kept as a reference for the faster version."""
    n, k = delta.shape
    cls = np.zeros(n, dtype=np.int64)
    count = 1
    while True:
        succ = np.where(delta >= 0, cls[np.maximum(delta, 0)], -1)
        sig = np.concatenate([cls[:, None], succ], axis=1)
        _, new = np.unique(sig, axis=0, return_inverse=True)
        new = new.reshape(-1)
        c = int(new.max()) + 1 if n else 0
        cls = new
        if c == count:
            break
        count = c
    return cls, _quotient(delta, cls)


def _canonical(alphabet: Alphabet, start: int, delta: Delta) -> tuple[int, tuple[tuple[int, ...], ...]]:
    k = alphabet.size
    if start < 0 or not delta:
        return -1, ()
    arr = np.asarray(delta, dtype=np.int64).reshape(-1, k)
    alive = _trim(arr)
    if not alive[start]:
        return -1, ()
    idx = np.full(len(arr), -1, dtype=np.int64)
    keep = np.flatnonzero(alive)
    idx[keep] = np.arange(len(keep))
    sub = arr[keep]
    sub = np.where(sub >= 0, idx[np.maximum(sub, 0)], -1)
    cls, q = _minimize(sub)
    s0 = int(cls[idx[start]])
    # breadth-first renumbering
    order = {s0: 0}
    queue = deque([s0])
    rows: list[tuple[int, ...]] = []
    while queue:
        s = queue.popleft()
        row = []
        for a in range(k):
            t = int(q[s, a])
            if t >= 0 and t not in order:
                order[t] = len(order)
                queue.append(t)
            row.append(order[t] if t >= 0 else -1)
        rows.append(tuple(row))
    return 0, tuple(rows)


def explore(alphabet: Alphabet, start: Hashable | None,
            succ: Callable[[Hashable, int], Hashable | None],
            limit: int | None = None) -> "SafetySet":
    """Build a canonical set by exploring a lazily defined automaton.

    ``succ(key, a)`` returns the successor key, or ``None`` for reject.
    """
    if start is None:
        return SafetySet.empty(alphabet)
    limit = max_states() if limit is None else limit
    ids: dict[Hashable, int] = {start: 0}
    keys = [start]
    delta: Delta = []
    k = alphabet.size
    i = 0
    while i < len(keys):
        key = keys[i]
        row = []
        for a in range(k):
            t = succ(key, a)
            if t is None:
                row.append(-1)
                continue
            j = ids.get(t)
            if j is None:
                j = len(keys)
                if j >= limit:
                    raise ResourceError(f"automaton exceeded {limit} states", limit=limit, observed=j + 1)
                ids[t] = j
                keys.append(t)
            row.append(j)
        delta.append(row)
        i += 1
    return SafetySet.from_table(alphabet, 0, delta)


# ---------------------------------------------------------------------------
# the set type


@dataclass(frozen=True)
class SafetySet:
    """A closed subset of ``A^N`` given by a canonical safety automaton.

    Parameters
    ----------
    alphabet : Alphabet
    start : int
        Start state, ``-1`` for the empty set.
    delta : tuple of tuple of int
        ``delta[q][a]`` is the successor of state q on letter a, or ``-1``.

    Use :meth:`from_table` (or :func:`explore`) to build instances; it
    canonicalizes, so ``==`` is set equality.
    """

    alphabet: Alphabet
    start: int
    delta: tuple[tuple[int, ...], ...]

    # construction -----------------------------------------------------------

    @classmethod
    def from_table(cls, alphabet: Alphabet, start: int, delta: Iterable[Sequence[int]]) -> "SafetySet":
        rows = [list(r) for r in delta]
        for r in rows:
            if len(r) != alphabet.size:
                raise DomainError("transition row length differs from alphabet size")
        s, d = _canonical(alphabet, start, rows)
        return cls(alphabet, s, d)

    @classmethod
    def empty(cls, alphabet: Alphabet) -> "SafetySet":
        return cls(alphabet, -1, ())

    @classmethod
    def full(cls, alphabet: Alphabet) -> "SafetySet":
        return cls(alphabet, 0, (tuple([0] * alphabet.size),))

    @classmethod
    def cylinder(cls, cyl: Cylinder) -> "SafetySet":
        return cls.with_prefix(cyl.alphabet, cyl.prefix)

    @classmethod
    def with_prefix(cls, alphabet: Alphabet, prefix: Sequence[int]) -> "SafetySet":
        prefix = tuple(prefix)
        n = len(prefix)

        def succ(i, a):
            if i < n:
                return i + 1 if a == prefix[i] else None
            return n

        return explore(alphabet, 0, succ)

    @classmethod
    def singleton(cls, x: UPPoint) -> "SafetySet":
        p, c = len(x.preperiod), len(x.cycle)

        def succ(i, a):
            if a != x.at(i):
                return None
            return i + 1 if i + 1 < p + c else p

        return explore(x.alphabet, 0, succ)

    @classmethod
    def block_pattern(cls, alphabet: Alphabet, pieces: Sequence[Iterable[Sequence[int]]],
                      prefix: Sequence[int] = ()) -> "SafetySet":
        """Sequences ``prefix . W_0 W_1 ... W_{r-1} W_0 W_1 ...`` with ``W_j`` in ``pieces[j]``.

        Each piece is a nonempty set of words of equal length. The result is
        the closed set of all such infinite concatenations.
        """
        prefix = tuple(prefix)
        tries = []
        for words in pieces:
            ws = {tuple(w) for w in words}
            if not ws:
                return cls.empty(alphabet)
            lengths = {len(w) for w in ws}
            if len(lengths) != 1 or 0 in lengths:
                raise DomainError("each piece must hold nonempty words of one length")
            prefixes = {w[:i] for w in ws for i in range(len(next(iter(ws))) + 1)}
            tries.append((prefixes, lengths.pop()))
        r = len(tries)

        def succ(key, a):
            if key[0] == "p":
                i = key[1]
                if prefix[i] != a:
                    return None
                return ("p", i + 1) if i + 1 < len(prefix) else (0, ())
            j, u = key
            v = u + (a,)
            prefs, length = tries[j]
            if v not in prefs:
                return None
            if len(v) == length:
                return ((j + 1) % r, ())
            return (j, v)

        return explore(alphabet, ("p", 0) if prefix else (0, ()), succ)

    # basic queries ----------------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def is_empty(self) -> bool:
        return self.start < 0

    def is_universal(self) -> bool:
        return self.n_states == 1 and all(t == 0 for t in self.delta[0])

    def run(self, word: Sequence[int], state: int | None = None) -> int:
        """State after reading ``word``; ``-1`` if rejected."""
        q = self.start if state is None else state
        for a in word:
            if q < 0:
                return -1
            q = self.delta[q][a]
        return q

    def accepts(self, word: Sequence[int] | Word) -> bool:
        """Whether ``word`` is a prefix of some point of the set."""
        letters = word.letters if isinstance(word, Word) else word
        return self.run(letters) >= 0

    def contains(self, x: UPPoint) -> bool:
        _check_same(self.alphabet, x.alphabet)
        return self.start >= 0 and self.accepts_from(self.start, x)

    def accepts_from(self, q: int, x: UPPoint) -> bool:
        """Whether the run from state ``q`` on ``x`` never rejects."""
        for a in x.preperiod:
            q = self.delta[q][a]
            if q < 0:
                return False
        c = len(x.cycle)
        seen = set()
        r = 0
        while (q, r) not in seen:
            seen.add((q, r))
            q = self.delta[q][x.cycle[r]]
            if q < 0:
                return False
            r = (r + 1) % c
        return True

    def states_at_depth(self, q: int) -> frozenset[int]:
        cur = {self.start} if self.start >= 0 else set()
        for _ in range(q):
            cur = {t for s in cur for t in self.delta[s] if t >= 0}
        return frozenset(cur)

    def count(self, n: int) -> int:
        """Number of length-n prefixes (exact integer)."""
        if self.start < 0:
            return 0
        vec = {self.start: 1}
        for _ in range(n):
            nxt: dict[int, int] = {}
            for s, c in vec.items():
                for t in self.delta[s]:
                    if t >= 0:
                        nxt[t] = nxt.get(t, 0) + c
            vec = nxt
        return sum(vec.values())

    def words(self, n: int) -> list[tuple[int, ...]]:
        """All length-n prefixes, in lexicographic order."""
        if self.start < 0:
            return []
        out = []

        def rec(q, acc):
            if len(acc) == n:
                out.append(tuple(acc))
                return
            for a, t in enumerate(self.delta[q]):
                if t >= 0:
                    acc.append(a)
                    rec(t, acc)
                    acc.pop()

        rec(self.start, [])
        return out

    def to_json(self) -> dict:
        return {
            "alphabet": self.alphabet.to_json(),
            "start": self.start,
            "transitions": [list(r) for r in self.delta],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SafetySet":
        return cls.from_table(Alphabet.of(data["alphabet"]), int(data["start"]), data["transitions"])


# ---------------------------------------------------------------------------
# algebra


def intersect(a: SafetySet, b: SafetySet) -> SafetySet:
    _check_same(a.alphabet, b.alphabet)
    if a.is_empty() or b.is_empty():
        return SafetySet.empty(a.alphabet)

    def succ(key, x):
        p, q = a.delta[key[0]][x], b.delta[key[1]][x]
        return None if p < 0 or q < 0 else (p, q)

    return explore(a.alphabet, (a.start, b.start), succ)


def union(a: SafetySet, b: SafetySet) -> SafetySet:
    _check_same(a.alphabet, b.alphabet)
    if a.is_empty():
        return b
    if b.is_empty():
        return a

    def succ(key, x):
        p = a.delta[key[0]][x] if key[0] >= 0 else -1
        q = b.delta[key[1]][x] if key[1] >= 0 else -1
        return None if p < 0 and q < 0 else (p, q)

    return explore(a.alphabet, (a.start, b.start), succ)


def _subset_construction(alphabet: Alphabet, start: frozenset,
                         step: Callable[[Hashable, int], Iterable[Hashable]]) -> SafetySet:
    if not start:
        return SafetySet.empty(alphabet)

    def succ(key, x):
        nxt = frozenset(t for s in key for t in step(s, x))
        return nxt or None

    return explore(alphabet, start, succ)


def shift_image(a: SafetySet, q: int) -> SafetySet:
    """``{sigma^q x : x in a}``."""
    if q < 0:
        raise DomainError("shift amount must be nonnegative")
    if a.is_empty():
        return a

    def step(s, x):
        t = a.delta[s][x]
        return (t,) if t >= 0 else ()

    return _subset_construction(a.alphabet, a.states_at_depth(q), step)


def shift_preimage(a: SafetySet, q: int) -> SafetySet:
    """``{x : sigma^q x in a}``: q free letters followed by a point of ``a``."""
    if q < 0:
        raise DomainError("shift amount must be nonnegative")
    if a.is_empty():
        return a

    def succ(key, x):
        if key[0] == "free":
            return ("free", key[1] + 1) if key[1] + 1 < q else ("a", a.start)
        t = a.delta[key[1]][x]
        return ("a", t) if t >= 0 else None

    return explore(a.alphabet, ("free", 0) if q > 0 else ("a", a.start), succ)


def _chunks(a: SafetySet, s: int) -> list[list[tuple[tuple[int, ...], int]]]:
    """For every state, the list of (length-s word, end state) pairs it can read."""
    out = []
    for q in range(a.n_states):
        paths = [((), q)]
        for _ in range(s):
            paths = [(w + (x,), t) for w, p in paths for x, t in enumerate(a.delta[p]) if t >= 0]
        out.append(paths)
    return out


def code_image(a: SafetySet, code: LocalRule) -> SafetySet:
    """``{code(x) : x in a}`` over the target alphabet.

    The source is read in chunks of ``step`` letters; an output letter needs
    ``K = ceil(window/step)`` consecutive chunks, so the nondeterministic
    states are (source state, last ``K-1`` chunks).
    """
    _check_same(a.alphabet, code.source)
    if a.is_empty():
        return SafetySet.empty(code.target)
    s, w = code.step, code.window
    big_k = -(-w // s)
    chunks = _chunks(a, s)
    start = {(a.start, ())}
    for _ in range(big_k - 1):
        start = {(t, buf + (c,)) for q, buf in start for c, t in chunks[q]}

    cache: dict = {}

    def step(state, y):
        key = (state, y)
        hit = cache.get(key)
        if hit is not None:
            return hit
        q, buf = state
        res = []
        for c, t in chunks[q]:
            block = sum(buf + (c,), ())[:w]
            if code.local(block) == y:
                res.append((t, (buf + (c,))[1:]))
        cache[key] = res
        return res

    return _subset_construction(code.target, frozenset(start), step)


def code_preimage(a: SafetySet, code: LocalRule) -> SafetySet:
    """``{x : code(x) in a}`` over the source alphabet."""
    _check_same(a.alphabet, code.target)
    if a.is_empty():
        return SafetySet.empty(code.source)
    s, w = code.step, code.window
    big_w = s * (-(-w // s))

    def succ(key, x):
        q, buf = key
        buf = buf + (x,)
        if len(buf) == big_w:
            q = a.delta[q][code.local(buf[:w])]
            if q < 0:
                return None
            buf = buf[s:]
        return (q, buf)

    return explore(code.source, (a.start, ()), succ)


def is_universal(a: SafetySet) -> bool:
    return a.is_universal()


def is_empty(a: SafetySet) -> bool:
    return a.is_empty()


def equals(a: SafetySet, b: SafetySet) -> bool:
    _check_same(a.alphabet, b.alphabet)
    return a == b


def includes(big: SafetySet, small: SafetySet) -> bool:
    """True iff ``small`` is a subset of ``big``."""
    return intersect(big, small) == small


def lex_least(a: SafetySet) -> UPPoint | None:
    """Lexicographically least point, or None for the empty set."""
    if a.is_empty():
        return None
    seen: dict[int, int] = {}
    letters: list[int] = []
    q = a.start
    while q not in seen:
        seen[q] = len(letters)
        x = next(i for i, t in enumerate(a.delta[q]) if t >= 0)
        letters.append(x)
        q = a.delta[q][x]
    i = seen[q]
    return UPPoint(a.alphabet, tuple(letters[:i]), tuple(letters[i:]))


def shortest_rejected(a: SafetySet) -> tuple[int, ...] | None:
    """A shortest word that is not a prefix of any point; None if universal."""
    if a.is_empty():
        return ()
    seen = {a.start: ()}
    queue = deque([a.start])
    while queue:
        q = queue.popleft()
        for x, t in enumerate(a.delta[q]):
            if t < 0:
                return seen[q] + (x,)
            if t not in seen:
                seen[t] = seen[q] + (x,)
                queue.append(t)
    return None


def suffix_membership(a: SafetySet, x: UPPoint) -> tuple[tuple[bool, ...], tuple[bool, ...]]:
    """Which shifts of ``x`` lie in ``a``.

    Returns ``(pre, cyc)`` with ``pre[n]`` the answer for ``sigma^n x`` when
    ``n < len(x.preperiod)`` and ``cyc[r]`` the answer for
    ``n = len(x.preperiod) + r + j * len(x.cycle)``, any ``j >= 0``.
    """
    _check_same(a.alphabet, x.alphabet)
    p, c = len(x.preperiod), len(x.cycle)
    if a.is_empty():
        return (False,) * p, (False,) * c
    # acc[(q, r)]: does state q accept the periodic word starting at phase r
    acc: dict[tuple[int, int], bool] = {}

    def accepted(q: int, r: int) -> bool:
        path = []
        on_path = set()
        node = (q, r)
        while True:
            if node in acc:
                res = acc[node]
                break
            if node in on_path:
                res = True
                break
            on_path.add(node)
            path.append(node)
            t = a.delta[node[0]][x.cycle[node[1]]]
            if t < 0:
                res = False
                break
            node = (t, (node[1] + 1) % c)
        for nd in path:
            acc[nd] = res
        return res

    cyc = tuple(accepted(a.start, r) for r in range(c))
    # preperiod: memoize on (state, position) so runs from nearby starts merge
    memo: dict[tuple[int, int], bool] = {}
    pre = []
    for n in range(p):
        path = []
        q, i = a.start, n
        while True:
            if i == p:
                res = accepted(q, 0)
                break
            hit = memo.get((q, i))
            if hit is not None:
                res = hit
                break
            path.append((q, i))
            q = a.delta[q][x.preperiod[i]]
            i += 1
            if q < 0:
                res = False
                break
        for node in path:
            memo[node] = res
        pre.append(res)
    return tuple(pre), cyc


def member_at(a: SafetySet, x: UPPoint, n: int) -> bool:
    """Whether ``sigma^n x`` lies in ``a``; uses :func:`suffix_membership`."""
    pre, cyc = suffix_membership(a, x)
    return pre[n] if n < len(pre) else cyc[(n - len(pre)) % len(cyc)]


__all__ = [
    "SafetySet", "explore", "intersect", "union", "shift_image", "shift_preimage",
    "code_image", "code_preimage", "is_universal", "is_empty", "equals", "includes",
    "lex_least", "shortest_rejected", "suffix_membership", "member_at", "max_states",
]
