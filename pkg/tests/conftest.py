from fractions import Fraction
from math import gcd

import pytest
from hypothesis import strategies as st

from rmdf.graph import Actor, Channel, Graph, Kind
from rmdf.specio import load_model


@pytest.fixture(scope="session")
def ingenuity():
    return load_model("ingenuity")


@pytest.fixture(scope="session")
def fig1():
    return load_model("fig1-example")


RATE_SCALES = (Fraction(1), Fraction(2), Fraction(1, 2), Fraction(1, 3), Fraction(3, 2))


@st.composite
def balanced_graphs(draw, max_actors=8, max_channels=12, back_edges=True, self_loops=True):
    """Random consistent graphs of usual actors.

    Actor 0 is timed. Every other actor hangs off an earlier one, so all are
    anchored. Rates are drawn around a random repetition vector, which
    makes every channel balanced by construction. Back edges and self-loops
    carry a full hyperperiod of initial tokens.
    """
    n = draw(st.integers(1, max_actors))
    reps = [draw(st.integers(1, 4)) for _ in range(n)]
    base = draw(st.sampled_from([Fraction(10), Fraction(20), Fraction(25), Fraction(50)]))
    times = st.sampled_from([Fraction(1, 10), Fraction(1, 5), Fraction(1, 4), Fraction(1, 2)])
    actors = []
    for i in range(n):
        bcet = draw(times)
        wcet = bcet + draw(st.sampled_from([Fraction(0), Fraction(1, 10)]))
        second_timed = i > 0 and draw(st.integers(0, 5)) == 0
        if i == 0 or second_timed:
            actors.append(Actor(f"a{i}", Kind.TIMED, bcet, wcet, base * reps[i], Fraction(0)))
        else:
            actors.append(Actor(f"a{i}", Kind.USUAL, bcet, wcet))

    def rates(p, c):
        s = draw(st.sampled_from(RATE_SCALES))
        k = gcd(reps[p], reps[c])
        return s * reps[c] / k, s * reps[p] / k

    channels = []
    for j in range(1, n):
        if len(channels) >= max_channels:
            break
        if actors[j].kind is Kind.TIMED:
            continue
        p = draw(st.integers(0, j - 1))
        prod, cons = rates(p, j)
        channels.append(Channel(f"e{len(channels)}", f"a{p}", f"a{j}", prod, cons))
    extra = draw(st.integers(0, max(0, max_channels - len(channels))))
    for _ in range(extra):
        p, c = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        if p == c:
            if not self_loops:
                continue
            r = draw(st.sampled_from(RATE_SCALES))
            channels.append(Channel(f"e{len(channels)}", f"a{p}", f"a{p}", r, r, r))
            continue
        if p > c and not back_edges:
            p, c = c, p
        if actors[c].kind is Kind.TIMED:
            continue
        prod, cons = rates(p, c)
        init = cons * reps[c] if p > c else Fraction(0)
        channels.append(Channel(f"e{len(channels)}", f"a{p}", f"a{c}", prod, cons, init))
    return Graph(tuple(actors), tuple(channels))
