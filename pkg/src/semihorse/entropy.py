"""Topological entropy, separated sets, return times and mistake balls.

Entropy of a presented subshift is read off its canonical automaton: the
automaton is deterministic, so paths from the start state are in bijection
with admissible words and the growth rate of ``|L_n|`` is the largest
Perron root over its strongly connected components.

Distances are on the grid ``exp(-k)``. A radius ``eps`` enters through
``k = grid_index(eps)``, and ``d(sigma^j x, sigma^j y) < eps`` is agreement on
coordinates ``j..j+k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, ResourceError, StructuredFailure
from .reporting import csv_text
from .subshift import SubshiftPresentation, transition_matrix
from .symcore import Cylinder, UPPoint, grid_index

MAX_WORDS = 1 << 20


# ---------------------------------------------------------------------------
# spectral radius


@dataclass(frozen=True)
class SpectralResult:
    """Perron value with Collatz-Wielandt bounds.

    ``lower <= value <= upper`` are certified bounds on the spectral
    radius; ``irreducible`` is False when more than one component carries
    cycles (the value is then the maximum over components).
    """

    value: float
    lower: float
    upper: float
    iterations: int
    components: int
    irreducible: bool


def _perron_component(a: np.ndarray, tol: float, max_iter: int) -> tuple[float, float, float, int]:
    n = a.shape[0]
    b = a + np.eye(n)
    v = np.ones(n) / n
    lo, hi = 0.0, math.inf
    for it in range(1, max_iter + 1):
        w = b @ v
        ratios = w / v
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * hi:
            mid = 0.5 * (lo + hi)
            return mid - 1.0, lo - 1.0, hi - 1.0, it
        v = w / w.sum()
    raise StructuredFailure("power iteration did not converge", stage="spectral",
                            detail={"lower": lo - 1.0, "upper": hi - 1.0, "iterations": max_iter})


def spectral_radius(m: np.ndarray, *, tol: float = 1e-10, max_iter: int = 10 ** 5) -> SpectralResult:
    """Spectral radius of a nonnegative matrix, component by component.

    Power iteration runs on ``A_C + I`` for each strongly connected
    component C carrying a cycle; the shift by the identity makes the
    iteration matrix primitive, so periodic components converge too.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("matrix must be square")
    if (m < 0).any():
        raise DomainError("matrix must be nonnegative")
    n = m.shape[0]
    if n == 0:
        return SpectralResult(0.0, 0.0, 0.0, 0, 0, False)
    ncomp, labels = connected_components(csr_matrix(m), directed=True, connection="strong")
    best = (0.0, 0.0, 0.0)
    iters = 0
    cyclic = 0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        sub = m[np.ix_(idx, idx)]
        if not sub.any():
            continue
        cyclic += 1
        val, lo, hi, it = _perron_component(sub, tol, max_iter)
        iters += it
        if val > best[0]:
            best = (val, lo, hi)
    return SpectralResult(best[0], best[1], best[2], iters, cyclic, cyclic == 1)


# ---------------------------------------------------------------------------
# topological entropy


@dataclass(frozen=True)
class EntropyResult:
    value: float
    method: str
    irreducible: bool | None = None
    bounds: tuple[float, float] | None = None
    n_range: tuple[int, int] | None = None
    counts: tuple[int, ...] = ()


def entropy_details(x: SubshiftPresentation, method: str = "spectral",
                    n_range: tuple[int, int] = (10, 24)) -> EntropyResult:
    s = x.safety
    if s.is_empty():
        raise DomainError("entropy of an empty subshift is undefined")
    if method == "spectral":
        r = spectral_radius(transition_matrix(s))
        if r.value <= 0:
            return EntropyResult(0.0, method, r.irreducible, (0.0, 0.0))
        lo = math.log(r.lower) if r.lower > 0 else 0.0
        return EntropyResult(math.log(r.value), method, r.irreducible, (lo, math.log(r.upper)))
    if method == "growth":
        a, b = n_range
        if not 1 <= a < b:
            raise DomainError("n_range must satisfy 1 <= a < b")
        ns = np.arange(a, b + 1)
        counts = tuple(x.count(int(n)) for n in ns)
        logs = np.array([math.log(c) for c in counts])
        slope = float(np.polyfit(ns, logs, 1)[0])
        return EntropyResult(max(slope, 0.0), method, None, None, (a, b), counts)
    raise DomainError(f"unknown entropy method {method!r}")


def topological_entropy(x: SubshiftPresentation, method: str = "spectral",
                        n_range: tuple[int, int] = (10, 24)) -> float:
    """Topological entropy of a subshift.

    Parameters
    ----------
    x : SubshiftPresentation
    method : {"spectral", "growth"}
        ``spectral`` takes the log of the Perron value of the canonical
        automaton; ``growth`` fits the slope of ``log |L_n|`` over
        ``n_range``.

    Examples
    --------
    >>> from semihorse.subshift import golden_mean
    >>> round(topological_entropy(golden_mean()), 6)
    0.481212
    """
    return entropy_details(x, method, n_range).value


# ---------------------------------------------------------------------------
# separated sets


def _window_disagreements(words: np.ndarray, cand: np.ndarray, n: int, k: int) -> np.ndarray:
    """Per accepted word, the number of windows ``[j, j+k]`` (j < n) with a disagreement."""
    diff = (words != cand).astype(np.int32)
    cs = np.concatenate([np.zeros((diff.shape[0], 1), dtype=np.int32), np.cumsum(diff, axis=1)], axis=1)
    win = cs[:, k + 1:k + 1 + n] - cs[:, 0:n]
    return (win > 0).sum(axis=1)


@dataclass
class SeparatedSetReport:
    """A greedy separated family together with what it claims.

    Words have length ``n + k``. The claim is that any two words disagree
    somewhere in at least ``required`` of the windows ``[j, j+k]``,
    ``0 <= j < n``.
    """

    n: int
    k: int
    delta: float | None
    required: int
    words: list[tuple[int, ...]]
    rate: float = field(init=False)

    def __post_init__(self):
        self.rate = math.log(len(self.words)) / self.n if self.words else float("-inf")

    @property
    def size(self) -> int:
        return len(self.words)

    def recheck(self) -> bool:
        """Exhaustive pairwise re-validation of the separation claim."""
        if len(self.words) < 2:
            return True
        arr = np.array(self.words, dtype=np.int16)
        for i in range(len(arr) - 1):
            d = _window_disagreements(arr[i + 1:], arr[i], self.n, self.k)
            if (d < self.required).any():
                return False
        return True

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "delta": self.delta, "required_windows": self.required,
                "size": self.size, "rate": self.rate}


def _greedy(cands: list[tuple[int, ...]], n: int, k: int, required: int) -> list[tuple[int, ...]]:
    if not cands:
        return []
    arr = np.array(cands, dtype=np.int16)
    chosen = np.empty_like(arr)
    count = 0
    for row in arr:
        if count == 0 or _window_disagreements(chosen[:count], row, n, k).min() >= required:
            chosen[count] = row
            count += 1
    return [tuple(int(a) for a in r) for r in chosen[:count]]


def _candidates(x: SubshiftPresentation, length: int, limit: int) -> list[tuple[int, ...]]:
    c = x.count(length)
    if c > limit:
        raise ResourceError(f"|L_{length}| = {c} exceeds the enumeration limit {limit}",
                            resource="words", limit=limit, observed=c)
    return x.language(length)


def separated_set(x: SubshiftPresentation, n: int, eps: float, *,
                  limit: int = MAX_WORDS) -> SeparatedSetReport:
    """Greedy ``(n, eps)``-separated family over ``L_{n+k}``.

    Two words are separated when they disagree somewhere in a window
    ``[j, j+k]`` with ``0 <= j < n``, where ``k = grid_index(eps)``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    k = max(grid_index(eps), 0)
    words = _greedy(_candidates(x, n + k, limit), n, k, 1)
    return SeparatedSetReport(n, k, None, 1, words)


def hamming_separated_set(x: SubshiftPresentation, delta: float, n: int, eps: float, *,
                          limit: int = MAX_WORDS) -> SeparatedSetReport:
    """Greedy family whose pairs disagree on at least ``delta * n`` windows."""
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    if n < 1:
        raise DomainError("n must be >= 1")
    k = max(grid_index(eps), 0)
    required = max(1, math.ceil(delta * n - 1e-12))
    words = _greedy(_candidates(x, n + k, limit), n, k, required)
    return SeparatedSetReport(n, k, delta, required, words)


# ---------------------------------------------------------------------------
# mistake functions


@dataclass(frozen=True)
class MistakeFunction:
    """A mistake budget ``g(n, eps)``; monotone in n and sublinear.

    Families (``c`` is the coefficient):

    * ``zero``: ``g = 0``;
    * ``constant``: ``g = floor(c)``;
    * ``sqrt``: ``g = floor(c * sqrt(n))``;
    * ``sublinear``: ``g = floor(c * n / log(n + 2))``. The ``+2`` keeps the
      formula monotone for every ``n >= 1``.

    None of the families depend on ``eps``.
    """

    family: str = "zero"
    c: float = 0.0

    def __post_init__(self):
        if self.family not in ("zero", "constant", "sqrt", "sublinear"):
            raise DomainError(f"unknown mistake family {self.family!r}")
        if self.c < 0:
            raise DomainError("coefficient must be nonnegative")

    def __call__(self, n: int, eps: float | None = None) -> int:
        if n < 1:
            raise DomainError("n must be >= 1")
        if self.family == "zero":
            return 0
        if self.family == "constant":
            return int(math.floor(self.c))
        if self.family == "sqrt":
            return int(math.floor(self.c * math.sqrt(n) + 1e-12))
        return int(math.floor(self.c * n / math.log(n + 2) + 1e-12))

    def _scan_bound(self) -> int:
        if self.family in ("zero", "constant"):
            return int(self.c) + 2
        if self.family == "sqrt":
            return int((self.c + 2) ** 2) + 2
        return int(math.exp(self.c + 1)) + 8

    def k_g(self, eps: float | None = None) -> int:
        """``min{m >= 1 : g(n) <= n - 1 for all n >= m}``."""
        last_bad = 0
        for n in range(1, self._scan_bound() + 1):
            if self(n, eps) > n - 1:
                last_bad = n
        return last_bad + 1

    @property
    def sublinear(self) -> bool:
        """Symbolic check of ``g(n)/n -> 0`` from the family tag."""
        return True

    def is_monotone(self, n_max: int = 1000) -> bool:
        vals = [self(n) for n in range(1, n_max + 1)]
        return all(a <= b for a, b in zip(vals, vals[1:]))


Budget = MistakeFunction | int | Callable[[int, float], int] | None


def _budget(g: Budget, n: int, eps: float) -> int:
    if g is None:
        return 0
    if isinstance(g, int):
        return g
    return int(g(n, eps))


# ---------------------------------------------------------------------------
# balls and return times


def _coords(p: UPPoint | Sequence[int], length: int) -> tuple[int, ...]:
    if isinstance(p, UPPoint):
        return p.prefix(length)
    seq = tuple(p.letters) if hasattr(p, "letters") else tuple(p)
    if len(seq) < length:
        raise DomainError(f"need {length} coordinates, got {len(seq)}")
    return seq[:length]


def window_mistakes(x: Sequence[int], y: Sequence[int], n: int, k: int) -> int:
    """Number of ``j < n`` with a disagreement of x and y on ``[j, j+k]``."""
    bad = [a != b for a, b in zip(x[:n + k], y[:n + k])]
    cs = [0]
    for v in bad:
        cs.append(cs[-1] + v)
    return sum(1 for j in range(n) if cs[j + k + 1] - cs[j] > 0)


def mistake_ball_membership(x, y, n: int, eps: float, g: Budget = None) -> bool:
    """Whether y lies in the mistake dynamical ball of length n around x.

    At least ``max(1, n - g(n, eps))`` window indices ``j < n`` must show
    agreement of x and y on ``[j, j+k]``.

    Examples
    --------
    >>> mistake_ball_membership((0, 0, 0, 0), (0, 1, 0, 0), 4, 1.0, 1)
    True
    >>> mistake_ball_membership((0, 0, 0, 0), (0, 1, 0, 0), 4, 1.0, 0)
    False
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    k = max(grid_index(eps), 0) if eps <= 1 else -1
    if k < 0:
        return True
    length = n + k
    xs, ys = _coords(x, length), _coords(y, length)
    bad = window_mistakes(xs, ys, n, k)
    return n - bad >= max(1, n - _budget(g, n, eps))


@dataclass(frozen=True)
class BoundExceeded:
    bound: int

    def __str__(self) -> str:
        return f"BoundExceeded({self.bound})"


def return_time(x: UPPoint, n: int, eps: float, g: Budget = None, *,
                bound: int = 10 ** 6) -> int | BoundExceeded:
    """Least ``k >= 1`` with ``sigma^k x`` in the (mistake) ball around x.

    Examples
    --------
    >>> from semihorse.symcore import Alphabet
    >>> return_time(UPPoint.parse(Alphabet.range(2), "(0011)"), 2, 0.9)
    4
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    k = max(grid_index(eps), 0)
    length = n + k
    base = x.prefix(length)
    # shifts beyond preperiod + period repeat earlier ones
    p, c = len(x.preperiod), len(x.cycle)
    for t in range(1, min(bound, p + c) + 1):
        if mistake_ball_membership(base, x.window(t, length), n, eps, g):
            return t
    return BoundExceeded(bound)


def return_time_sequence(seq: np.ndarray, n: int, k: int = 0, g: int = 0,
                         bound: int | None = None) -> int | BoundExceeded:
    """Return time for a finite sample path (direct scan)."""
    length = n + k
    base = seq[:length]
    last = len(seq) - length if bound is None else min(bound, len(seq) - length)
    if g == 0:
        from numpy.lib.stride_tricks import sliding_window_view

        win = sliding_window_view(seq, length)[1:last + 1]
        hits = np.flatnonzero((win == base).all(axis=1))
        return int(hits[0]) + 1 if hits.size else BoundExceeded(last)
    for t in range(1, last + 1):
        if n - window_mistakes(base, seq[t:t + length], n, k) >= max(1, n - g):
            return t
    return BoundExceeded(last)


# ---------------------------------------------------------------------------
# Markov measures and the return-time sampler


@dataclass(frozen=True)
class MarkovMeasure:
    """A one-step Markov measure on the alphabet of ``support``."""

    support: SubshiftPresentation
    P: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        p = np.asarray(self.p, dtype=float)
        k = self.support.alphabet.size
        if P.shape != (k, k) or p.shape != (k,):
            raise DomainError("transition matrix shape must match the alphabet")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1).max() > 1e-12:
            raise DomainError("P must be row-stochastic")
        if (p < 0).any() or abs(p.sum() - 1) > 1e-12 or np.abs(p @ P - p).max() > 1e-12:
            raise DomainError("p must be a stationary probability vector")
        for a in range(k):
            for b in range(k):
                if P[a, b] > 0 and p[a] > 0 and not self.support.accepts((a, b)):
                    raise DomainError(f"P charges the inadmissible word {a}{b}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "p", p)

    @classmethod
    def bernoulli(cls, support: SubshiftPresentation, probs: Sequence[float]) -> "MarkovMeasure":
        q = np.asarray(probs, dtype=float)
        return cls(support, np.tile(q, (len(q), 1)), q)

    @classmethod
    def point_mass(cls, support: SubshiftPresentation, symbol: int) -> "MarkovMeasure":
        k = support.alphabet.size
        P = np.zeros((k, k))
        P[:, symbol] = 1.0
        p = np.zeros(k)
        p[symbol] = 1.0
        return cls(support, P, p)

    @property
    def entropy(self) -> float:
        """``h_mu = -sum_a p_a sum_b P_ab log P_ab``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(self.P > 0, self.P * np.log(np.where(self.P > 0, self.P, 1)), 0.0)
        return float(-(self.p * terms.sum(axis=1)).sum())

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        k = self.P.shape[0]
        out = np.empty(n, dtype=np.int8)
        if n == 0:
            return out
        out[0] = rng.choice(k, p=self.p)
        cum = np.cumsum(self.P, axis=1)
        u = rng.random(n)
        for i in range(1, n):
            out[i] = min(int(np.searchsorted(cum[out[i - 1]], u[i], side="right")), k - 1)
        return out


def _kmp_table(w: Sequence[int], k: int) -> np.ndarray:
    """Pattern-matching automaton: ``delta[j, a]`` for ``0 <= j <= len(w)``."""
    m = len(w)
    fail = [0] * (m + 1)
    delta = np.zeros((m + 1, k), dtype=np.int64)
    for j in range(m + 1):
        for a in range(k):
            if j < m and w[j] == a:
                delta[j, a] = j + 1
            else:
                delta[j, a] = 0 if j == 0 else delta[fail[j], a]
        if j < m:
            if j == 0:
                fail[1] = 0
            else:
                fail[j + 1] = int(delta[fail[j], w[j]])
    return delta


def sample_return_time(measure: MarkovMeasure, word: Sequence[int], u: float,
                       max_log2: int = 62) -> int | BoundExceeded:
    """Exact inverse-CDF draw of the return time of a point starting with ``word``.

    Given that the point starts with ``word`` (length L), the future letters
    follow the Markov chain, and the return time is the first ``t >= 1``
    with ``x[t:t+L] == word``. That is an absorption time in the
    pattern-matching automaton, so ``P(R > t)`` is a row of a matrix
    power; the draw finds the least t with ``P(R > t) < u`` by binary
    lifting over powers ``Q^(2^j)``.
    """
    k = measure.P.shape[0]
    L = len(word)
    delta = _kmp_table(word, k)
    # transient states (j, a): KMP state j < L, last letter a
    idx = {}
    for j in range(L):
        for a in range(k):
            idx[(j, a)] = len(idx)
    n = len(idx)
    Q = np.zeros((n, n))
    for (j, a), i in idx.items():
        for b in range(k):
            pr = measure.P[a, b]
            if pr == 0:
                continue
            t = int(delta[j, b])
            if t < L:
                Q[i, idx[(t, b)]] += pr
    border = _border_state(delta, word)
    v = np.zeros(n)
    v[idx[(border, word[-1])]] = 1.0
    powers = [Q]
    for _ in range(max_log2 - 1):
        powers.append(powers[-1] @ powers[-1])
    t = 0
    for j in range(max_log2 - 1, -1, -1):
        w = v @ powers[j]
        if w.sum() >= u:
            v = w
            t += 1 << j
    if v.sum() >= u and t >= (1 << max_log2) - 1:
        return BoundExceeded(t)
    return t + 1


def _border_state(delta: np.ndarray, word: Sequence[int]) -> int:
    """KMP state right after a full match of ``word`` (its longest proper border)."""
    j = 0
    for a in word[1:]:
        j = int(delta[j, a])
    return j


@dataclass
class ReturnTimeRow:
    n: int
    median: float
    q1: float
    q3: float
    h_mu: float
    samples: int
    exceeded: int
    seed: int
    values: list[float] = field(default_factory=list, repr=False)


@dataclass
class OrnsteinWeissReport:
    rows: list[ReturnTimeRow]
    method: str
    eps: float
    seed: int

    def to_json(self) -> dict:
        return {
            "method": self.method, "eps": self.eps, "seed": self.seed,
            "rows": [{k: v for k, v in r.__dict__.items() if k != "values"} for r in self.rows],
        }

    def to_csv(self) -> str:
        out = []
        for r in self.rows:
            for stat in ("median", "q1", "q3", "h_mu", "exceeded"):
                out.append((r.n, stat, getattr(r, stat), r.seed))
        return csv_text(("n", "stat", "value", "seed"), out)


def ornstein_weiss_report(measure: MarkovMeasure, n_range: Iterable[int], eps: float = 1.0,
                          g: Budget = None, samples: int = 200, seed: int = 0, *,
                          method: str = "exact", bound: int = 1 << 22) -> OrnsteinWeissReport:
    """Statistics of ``(1/n) log R_n`` over sampled points, next to ``h_mu``.

    ``method="exact"`` draws each return time from its exact conditional
    law (see :func:`sample_return_time`); it needs ``g`` to be zero.
    ``method="direct"`` simulates a path of length ``bound`` and scans it.
    Samples whose return time exceeds the bound are counted in
    ``exceeded`` and left out of the quantiles.
    """
    k = max(grid_index(eps), 0)
    rng = np.random.default_rng(seed)
    rows = []
    h = measure.entropy
    for n in n_range:
        gn = _budget(g, n, eps)
        if method == "exact" and gn:
            raise DomainError("the exact sampler handles the zero-mistake ball only")
        vals = []
        exceeded = 0
        for _ in range(samples):
            if method == "exact":
                head = measure.sample(n + k, rng)
                r = sample_return_time(measure, [int(a) for a in head], float(rng.random()))
            elif method == "direct":
                path = measure.sample(bound + n + k, rng)
                r = return_time_sequence(path, n, k, gn, bound)
            else:
                raise DomainError(f"unknown method {method!r}")
            if isinstance(r, BoundExceeded):
                exceeded += 1
                continue
            vals.append(math.log(r) / n)
        arr = np.array(vals) if vals else np.array([math.nan])
        rows.append(ReturnTimeRow(n, float(np.median(arr)), float(np.quantile(arr, 0.25)),
                                  float(np.quantile(arr, 0.75)), h, samples, exceeded, seed, vals))
    return OrnsteinWeissReport(rows, method, eps, seed)


# ---------------------------------------------------------------------------
# multiple recurrence


@dataclass(frozen=True)
class RecurrenceResult:
    found: bool
    l: int | None
    witness: UPPoint | None
    l_max: int
    period_bound: int

    def __str__(self) -> str:
        if self.found:
            return f"l={self.l} witness {self.witness}"
        return f"NotFoundUpTo({self.l_max})"


def periodic_points(x: SubshiftPresentation, period: int) -> list[UPPoint]:
    """Periodic points of exact minimal period ``period`` in X (one per orbit element)."""
    out = []
    for w in x.language(period):
        p = UPPoint(x.alphabet, (), w)
        if len(p.cycle) == period and x.safety.contains(p):
            out.append(p)
    return out


def multiple_recurrence_search(x: SubshiftPresentation, cyl: Cylinder, k: int, l_max: int,
                               period_bound: int = 8) -> RecurrenceResult:
    """Least l with a periodic ``z`` in the cylinder and ``sigma^{il} z`` in it for ``i <= k``."""
    if k < 1 or l_max < 1:
        raise DomainError("k and l_max must be >= 1")
    pts = [p for q in range(1, period_bound + 1) for p in periodic_points(x, q)]
    pts = [p for p in pts if cyl.contains(p)]
    for l in range(1, l_max + 1):
        for p in pts:
            if all(cyl.contains(p.shift(i * l)) for i in range(k + 1)):
                return RecurrenceResult(True, l, p, l_max, period_bound)
    return RecurrenceResult(False, None, None, l_max, period_bound)


__all__ = [
    "SpectralResult", "EntropyResult", "spectral_radius", "entropy_details", "topological_entropy",
    "SeparatedSetReport", "separated_set", "hamming_separated_set", "MistakeFunction",
    "mistake_ball_membership", "window_mistakes", "BoundExceeded", "return_time",
    "return_time_sequence", "MarkovMeasure", "sample_return_time", "ornstein_weiss_report",
    "OrnsteinWeissReport", "RecurrenceResult", "multiple_recurrence_search", "periodic_points",
]
