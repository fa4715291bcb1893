"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from semihorse.safety import SafetySet
from semihorse.symcore import Alphabet, UPPoint


@st.composite
def points(draw, k: int = 2, max_pre: int = 5, max_cyc: int = 4):
    A = Alphabet.range(k)
    pre = draw(st.lists(st.integers(0, k - 1), max_size=max_pre))
    cyc = draw(st.lists(st.integers(0, k - 1), min_size=1, max_size=max_cyc))
    return UPPoint(A, tuple(pre), tuple(cyc))


@st.composite
def safety_sets(draw, max_states: int = 5, max_letters: int = 3):
    """Random complete tables with -1 marking rejection."""
    k = draw(st.integers(1, max_letters))
    n = draw(st.integers(1, max_states))
    rows = draw(st.lists(st.lists(st.integers(-1, n - 1), min_size=k, max_size=k),
                         min_size=n, max_size=n))
    return SafetySet.from_table(Alphabet.range(k), 0, rows)


def random_table(rng: np.random.Generator, n: int, k: int, p_reject: float = 0.2) -> np.ndarray:
    t = rng.integers(0, n, size=(n, k))
    t[rng.random((n, k)) < p_reject] = -1
    return t
