"""Weights, correlated points and the end-to-end Bohr witness.

A weight is a bounded real sequence. It is non-trivial when the Cesaro
averages of ``|w_n|`` have positive limsup; here that limsup is only ever
estimated on a finite horizon. A point ``x`` is correlated with the weight
when ``(1/N) |sum_{n<N} w_n phi(sigma^n x)|`` stays away from zero for some
continuous observable ``phi``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, LiftError, SemihorseError, StructuredFailure
from .reporting import csv_text
from .safety import (LocalRule, SafetySet, code_preimage, intersect, lex_least,
                     suffix_membership)
from .symcore import Alphabet, UPPoint, Word

CHUNK = 4096


# ---------------------------------------------------------------------------
# weights


def _squarefree(n: int) -> np.ndarray:
    """``sf[i]`` is True iff ``i + 1`` is square-free, for ``i < n``."""
    sf = np.ones(n + 1, dtype=bool)
    d = 2
    while d * d <= n:
        sf[d * d::d * d] = False
        d += 1
    return sf[1:]


def _chunked_signs(seed: int, n: int) -> np.ndarray:
    """Seeded +-1 signs; chunk c is drawn from its own stream, so prefixes are stable."""
    out = np.empty(n)
    for c in range(-(-n // CHUNK)):
        rng = np.random.default_rng([seed, c])
        block = rng.integers(0, 2, size=CHUNK) * 2 - 1
        lo = c * CHUNK
        out[lo:lo + CHUNK] = block[:min(CHUNK, n - lo)]
    return out


@dataclass(frozen=True)
class Weight:
    """A bounded real sequence ``w_0, w_1, ...``.

    Kinds and their spec strings:

    =============  ============================  ==============================
    kind           spec                          values
    =============  ============================  ==============================
    explicit       ``explicit:[1, -0.5]``        the list, then zeros
    periodic       ``periodic:1,0,-1``           the cycle repeated
    random-sign    ``random-sign:seed=7``        seeded +-1
    mobius-like    ``mobius-like:seed=3``        0 off square-free n+1, else +-1
    harmonic       ``harmonic``                  ``1/(n+1)``
    zero           ``zero``                      0
    subsampled     (from :func:`subsample_weight`)  ``0, w_tau, w_{k+tau}, ...``
    =============  ============================  ==============================
    """

    kind: str
    data: tuple[float, ...] = ()
    seed: int = 0
    parent: "Weight | None" = None
    k: int = 1
    tau: int = 0

    KINDS = ("explicit", "periodic", "random-sign", "mobius-like", "harmonic", "zero", "subsampled")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown weight kind {self.kind!r}")
        data = tuple(float(v) for v in self.data)
        if any(not math.isfinite(v) for v in data):
            raise DomainError("weights must be finite")
        object.__setattr__(self, "data", data)
        if self.kind == "periodic" and not data:
            raise DomainError("periodic weight needs a nonempty cycle")
        if self.kind == "subsampled" and (self.parent is None or self.k < 1 or not 0 <= self.tau < self.k):
            raise DomainError("subsampled weight needs a parent, k >= 1 and 0 <= tau < k")

    # constructors -----------------------------------------------------------

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "Weight":
        return cls("explicit", tuple(values))

    @classmethod
    def periodic(cls, cycle: Sequence[float]) -> "Weight":
        return cls("periodic", tuple(cycle))

    @classmethod
    def random_sign(cls, seed: int) -> "Weight":
        return cls("random-sign", seed=int(seed))

    @classmethod
    def alternating(cls) -> "Weight":
        return cls.periodic((1.0, -1.0))

    @classmethod
    def parse(cls, spec: str) -> "Weight":
        """Parse a spec string; see the class docstring."""
        spec = spec.strip()
        head, _, rest = spec.partition(":")
        try:
            if head == "explicit":
                return cls.explicit(json.loads(rest))
            if head == "periodic":
                return cls.periodic([float(v) for v in rest.split(",") if v.strip()])
            if head in ("random-sign", "mobius-like"):
                key, _, val = rest.partition("=")
                if key.strip() != "seed":
                    raise DomainError(f"expected seed=<int> in {spec!r}")
                return cls(head, seed=int(val))
            if head in ("harmonic", "zero") and not rest:
                return cls(head)
            if head == "alternating" and not rest:
                return cls.alternating()
        except (ValueError, TypeError) as e:
            raise DomainError(f"bad weight spec {spec!r}: {e}") from None
        raise DomainError(f"unknown weight spec {spec!r}")

    def spec(self) -> str:
        if self.kind == "explicit":
            return "explicit:" + json.dumps(list(self.data))
        if self.kind == "periodic":
            return "periodic:" + ",".join(f"{v:g}" for v in self.data)
        if self.kind in ("random-sign", "mobius-like"):
            return f"{self.kind}:seed={self.seed}"
        if self.kind == "subsampled":
            return f"subsampled:k={self.k},tau={self.tau},of={self.parent.spec()}"
        return self.kind

    # evaluation -------------------------------------------------------------

    def values(self, n: int) -> np.ndarray:
        """``w_0, ..., w_{n-1}`` as float64."""
        if n < 0:
            raise DomainError("n must be >= 0")
        if self.kind == "explicit":
            out = np.zeros(n)
            m = min(n, len(self.data))
            out[:m] = self.data[:m]
            return out
        if self.kind == "periodic":
            return np.resize(np.array(self.data), n)
        if self.kind == "random-sign":
            return _chunked_signs(self.seed, n)
        if self.kind == "mobius-like":
            return np.where(_squarefree(n), _chunked_signs(self.seed, n), 0.0)
        if self.kind == "harmonic":
            return 1.0 / np.arange(1, n + 1)
        if self.kind == "zero":
            return np.zeros(n)
        # subsampled
        out = np.zeros(n)
        if n > 1:
            base = self.parent.values(self.k * (n - 2) + self.tau + 1)
            out[1:] = base[self.tau::self.k][:n - 1]
        return out

    @property
    def bound(self) -> float:
        if self.kind in ("explicit", "periodic"):
            return max((abs(v) for v in self.data), default=0.0)
        if self.kind == "zero":
            return 0.0
        if self.kind == "subsampled":
            return self.parent.bound
        return 1.0


@dataclass(frozen=True)
class Nontriviality:
    """Finite-horizon evidence about ``limsup (1/N) sum |w_n|``.

    ``value`` is the average at the horizon, ``running_sup`` the sup of the
    averages over ``N' <= N``. ``tail_sup`` is the sup over
    ``N/2 <= N' <= N`` and ``plateau`` says whether the mean over the last
    quarter is within 10% of it. ``nontrivial`` (a proxy, not a proof)
    requires a positive value and a plateau.
    """

    value: float
    running_sup: float
    tail_sup: float
    plateau: bool
    horizon: int

    @property
    def nontrivial(self) -> bool:
        return self.value > 1e-12 and self.plateau


def _averages(w: Weight, N: int) -> np.ndarray:
    return np.cumsum(np.abs(w.values(N))) / np.arange(1, N + 1)


def nontriviality_statistic(w: Weight, N: int) -> Nontriviality:
    """Average of ``|w_n|`` over ``n < N`` with the plateau heuristic.

    Examples
    --------
    >>> nontriviality_statistic(Weight.alternating(), 100).value
    1.0
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    avg = _averages(w, N)
    tail = avg[N // 2:]
    quarter = avg[N - max(1, N // 4):]
    tail_sup = float(tail.max())
    plateau = tail_sup > 0 and float(quarter.mean()) >= 0.9 * tail_sup
    return Nontriviality(float(avg[-1]), float(avg.max()), tail_sup, bool(plateau), N)


# ---------------------------------------------------------------------------
# observables and correlation


@dataclass(frozen=True)
class ObservableSpec:
    """``phi(x) = +1`` if ``x_0`` is even, ``-1`` if odd, on ``{0..2m-1}``."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("m must be >= 1")

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet.range(2 * self.m)

    def of_letters(self, letters: Sequence[int] | np.ndarray) -> np.ndarray:
        a = np.asarray(letters, dtype=np.int64)
        return np.where(a % 2 == 0, 1.0, -1.0)

    def evaluate(self, x, N: int) -> np.ndarray:
        """``phi(sigma^n x)`` for ``n < N``."""
        return self.of_letters(_letters(x, N))

    def describe(self) -> dict:
        return {"kind": "parity", "alphabet_size": 2 * self.m, "even": 1, "odd": -1}


def _letters(x, N: int) -> tuple[int, ...]:
    if isinstance(x, UPPoint):
        return x.prefix(N)
    letters = x.letters if isinstance(x, Word) else tuple(x)
    if len(letters) < N:
        raise DomainError(f"point prefix of length {len(letters)} is shorter than N = {N}")
    return tuple(letters[:N])


def champernowne(m: int, n: int) -> tuple[int, ...]:
    """All words of length 1, 2, 3, ... over ``{0..m-1}`` in order, truncated to n.

    Every finite word occurs, which is what the entropy certificate needs.
    """
    out: list[int] = []
    length = 1
    while len(out) < n:
        for i in range(m ** length):
            v, word = i, []
            for _ in range(length):
                v, r = divmod(v, m)
                word.append(r)
            out.extend(reversed(word))
            if len(out) >= n:
                break
        length += 1
    return tuple(out[:n])


def lemma_a_point(w: Weight, m: int, N: int, free_choice: Sequence[int] | None = None) -> Word:
    """``y_n = 2 c_n + (0 if w_n >= 0 else 1)`` for ``n < N``.

    With the parity observable, ``w_n phi(sigma^n y) = |w_n|`` for every n.
    ``free_choice`` supplies ``c_n`` in ``{0..m-1}`` (default:
    :func:`champernowne`).

    Examples
    --------
    >>> str(lemma_a_point(Weight.alternating(), 2, 6, [0] * 6))
    '010101'
    """
    if m < 1 or N < 0:
        raise DomainError("need m >= 1 and N >= 0")
    c = champernowne(m, N) if free_choice is None else tuple(int(v) for v in free_choice)
    if len(c) < N:
        raise DomainError(f"free_choice has {len(c)} entries, need {N}")
    if any(not 0 <= v < m for v in c[:N]):
        raise DomainError(f"free_choice entries must lie in 0..{m - 1}")
    neg = w.values(N) < 0
    return Word(Alphabet.range(2 * m), tuple(2 * c[n] + int(neg[n]) for n in range(N)))


@dataclass
class CorrelationReport:
    """Curves ``corr(N') = (1/N')|sum_{n<N'} w_n phi(sigma^n x)|`` and a reference curve."""

    horizon: int
    correlation: np.ndarray
    reference: np.ndarray
    tol: float = 1e-12

    @property
    def max_abs_diff(self) -> float:
        return float(np.max(np.abs(self.correlation - self.reference))) if self.horizon else 0.0

    @property
    def equal(self) -> bool:
        return self.max_abs_diff <= self.tol

    @property
    def verdict(self) -> str:
        return "equal" if self.equal else "differs"

    @property
    def plateau(self) -> float:
        """Mean of the correlation curve over the last quarter."""
        q = max(1, self.horizon // 4)
        return float(self.correlation[-q:].mean())

    @property
    def running_sup(self) -> float:
        return float(self.correlation.max())

    def to_json(self) -> dict:
        return {"horizon": self.horizon, "final": float(self.correlation[-1]),
                "reference_final": float(self.reference[-1]), "plateau": self.plateau,
                "running_sup": self.running_sup, "max_abs_diff": self.max_abs_diff,
                "tolerance": self.tol, "verdict": self.verdict}

    def to_csv(self) -> str:
        rows = ((i + 1, repr(float(c)), repr(float(r)))
                for i, (c, r) in enumerate(zip(self.correlation, self.reference)))
        return csv_text(["N", "correlation", "reference"], rows)


def correlation_average(x, phi, w: Weight, N: int, *, reference: np.ndarray | None = None,
                        tol: float = 1e-12) -> CorrelationReport:
    """Correlation curve of ``x`` with ``w`` through ``phi`` for ``N' = 1..N``.

    ``phi`` is anything with ``evaluate(x, N)``. The reference curve
    defaults to ``(1/N') sum_{n<N'} |w_n|``.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    ws = w.values(N)
    vals = np.asarray(phi.evaluate(x, N), dtype=float)
    counts = np.arange(1, N + 1)
    corr = np.abs(np.cumsum(ws * vals)) / counts
    ref = np.cumsum(np.abs(ws)) / counts if reference is None else np.asarray(reference)
    return CorrelationReport(N, corr, ref, tol)


# ---------------------------------------------------------------------------
# subsampling and lifting


def subsample_weight(w: Weight, k: int, N: int) -> tuple[int, Weight, np.ndarray]:
    """Choose ``tau*`` maximizing ``(1/N) sum_{n<N} |w_{kn+tau}|`` (ties: smallest).

    Returns ``(tau*, varpi, stats)`` where ``varpi_0 = 0`` and
    ``varpi_n = w_{k(n-1)+tau*}``.
    """
    if k < 1 or N < 1:
        raise DomainError("need k >= 1 and N >= 1")
    a = np.abs(w.values(k * N)).reshape(N, k)
    stats = a.mean(axis=0)
    tau = int(np.argmax(stats))
    return tau, Weight("subsampled", parent=w, k=k, tau=tau), stats


def lift_correlated_point(pi: LocalRule, y: Word | Sequence[int],
                          domain: SafetySet | None = None) -> Word:
    """Least word ``x`` (in ``domain``'s language) whose image under ``pi`` is ``y``.

    The returned prefix has length ``step * (len(y) - 1) + window``.

    Raises
    ------
    LiftError
        When no preimage exists.
    """
    letters = y.letters if isinstance(y, Word) else tuple(y)
    if not letters:
        return Word(pi.source, ())
    target = SafetySet.with_prefix(pi.target, letters)
    pre = code_preimage(target, pi)
    if domain is not None:
        pre = intersect(pre, domain)
    x = lex_least(pre)
    if x is None:
        raise LiftError(f"no preimage of {pi.target.render(letters)}", detail={"length": len(letters)})
    n = pi.step * (len(letters) - 1) + pi.window
    return Word(pi.source, x.prefix(n))


def lift_point(pi: LocalRule, y: UPPoint, domain: SafetySet | None = None) -> UPPoint:
    """Least point ``x`` in ``domain`` with ``pi(x) == y``."""
    pre = code_preimage(SafetySet.singleton(y), pi)
    if domain is not None:
        pre = intersect(pre, domain)
    x = lex_least(pre)
    if x is None:
        raise LiftError(f"no preimage of {y}")
    return x


# ---------------------------------------------------------------------------
# end-to-end witness


@dataclass(frozen=True)
class ZeroExtendedObservable:
    """``phi o F`` on E, 0 on ``sigma^i E`` for ``0 < i < k``.

    Evaluation decides membership of each ``sigma^n x`` in E through the
    automaton; points outside every ``sigma^i E`` are an error since the
    observable is only constructed on their union.
    """

    E: SafetySet
    factor: LocalRule
    phi: ObservableSpec
    k: int

    def evaluate(self, x: UPPoint, N: int) -> np.ndarray:
        pre, cyc = suffix_membership(self.E, x)
        p, c = len(pre), len(cyc)
        w = self.factor.window
        out = np.zeros(N)
        for n in range(N):
            inside = pre[n] if n < p else cyc[(n - p) % c]
            if inside:
                out[n] = self.phi.of_letters([self.factor.local(x.window(n, w))])[0]
        return out

    def describe(self) -> dict:
        return {"kind": "zero-extended", "period": self.k, "on_E": self.phi.describe(),
                "elsewhere": 0}


@dataclass
class BohrWitness:
    """Everything the end-to-end pipeline produced, stage by stage."""

    point: UPPoint
    k: int
    tau_star: int
    observable: ZeroExtendedObservable
    report: CorrelationReport
    entropy_certificate: dict
    stages: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"k": self.k, "tau_star": self.tau_star, "observable": self.observable.describe(),
                "correlation": self.report.to_json(), "entropy_certificate": self.entropy_certificate,
                "stages": self.stages}


def _stage(name: str, fn: Callable, timings: dict):
    t0 = time.perf_counter()
    try:
        out = fn()
    except StructuredFailure as e:
        if e.stage != name:
            e.detail = {**(e.detail or {}), "pipeline_stage": name}
        raise
    except SemihorseError as e:
        raise StructuredFailure(str(e), stage=name, detail={"error": e.to_dict()}) from e
    timings[name] = round(time.perf_counter() - t0, 4)
    return out


def end_to_end_bohr_witness(lam: SafetySet, pi: LocalRule, N: int, w: Weight, horizon: int = 10_000,
                            *, depth: int = 8, m_check: int | None = None) -> BohrWitness:
    """A point correlated with ``w`` and a certificate for the entropy of such points.

    Stages: ``instance`` (checks, M, tau, rho, B0), ``prune``,
    ``first-return`` (a 4-block Theta, period ``k = tau L``), ``subsample``,
    ``lemma-a`` (on the 4-symbol factor), ``lift`` (through Theta, Xi_M and
    ``pi`` into E, then ``sigma^{k - tau*}``), ``correlate`` and
    ``certificate``.

    The entropy certificate checks that every one of the ``2^depth`` choices
    of free bits in the parity-point construction is realized by a point of E,
    which gives the bound ``(1/k) log 2``.
    """
    from .prune import build_instance, first_return_horseshoe, prune

    stats = nontriviality_statistic(w, horizon if m_check is None else m_check)
    if not stats.nontrivial:
        raise DomainError(f"weight looks trivial on the horizon (average {stats.value:g}, "
                          f"plateau {stats.plateau})")
    timings: dict = {}
    inst = _stage("instance", lambda: build_instance(lam, pi, N), timings)
    B, trace = _stage("prune", lambda: prune(inst), timings)
    fr = _stage("first-return", lambda: first_return_horseshoe(B, n_blocks=4), timings)
    k = fr.period
    n_blocks = -(-horizon // k) + 2
    tau, varpi, _ = _stage("subsample", lambda: subsample_weight(w, k, n_blocks), timings)
    u_word = _stage("lemma-a", lambda: lemma_a_point(varpi, 2, n_blocks), timings)

    def chain(u: UPPoint, blocks: int) -> UPPoint:
        # Theta and Xi_M are block codes with unique lifts; only pi needs a search
        x = lift_point(pi, inst.xi.point(fr.theta.point(u)), B.set)
        if not fr.E.contains(x):
            raise LiftError("lifted point is not in E")
        for j in range(blocks):
            if fr.factor.local(x.window(j * k, fr.factor.window)) != u.at(j):
                raise LiftError("factor image of the lift differs from its target", detail={"block": j})
        return x

    def lift():
        return chain(UPPoint(u_word.alphabet, u_word.letters, (0,)), n_blocks)

    x = _stage("lift", lift, timings)
    y = x.shift(k - tau)
    phi = ZeroExtendedObservable(fr.E, fr.factor, ObservableSpec(2), k)

    def correlate():
        a = np.abs(w.values(horizon))
        mask = (np.arange(horizon) % k == tau)
        ref = np.cumsum(np.where(mask, a, 0.0)) / np.arange(1, horizon + 1)
        return correlation_average(y, phi, w, horizon, reference=ref)

    report = _stage("correlate", correlate, timings)

    def certificate():
        covered = 0
        signs = varpi.values(depth)
        for c in range(2 ** depth):
            bits = [(c >> (depth - 1 - i)) & 1 for i in range(depth)]
            u = tuple(2 * b + int(s < 0) for b, s in zip(bits, signs))
            try:
                chain(UPPoint(u_word.alphabet, u, (0,)), depth)
            except LiftError:
                continue
            covered += 1
        return {"depth": depth, "words_covered": covered, "words_total": 2 ** depth,
                "k": k, "bound": math.log(2) / k, "complete": covered == 2 ** depth}

    cert = _stage("certificate", certificate, timings)
    stages = {"timings": timings, "prune": trace.to_json(), "first_return": fr.to_json(),
              "M": inst.M, "tau": inst.tau, "L": fr.L, "nontriviality": stats.value}
    return BohrWitness(y, k, tau, phi, report, cert, stages)


__all__ = [
    "Weight", "Nontriviality", "nontriviality_statistic", "ObservableSpec", "champernowne",
    "lemma_a_point", "CorrelationReport", "correlation_average", "subsample_weight",
    "lift_correlated_point", "lift_point", "ZeroExtendedObservable", "BohrWitness",
    "end_to_end_bohr_witness",
]
