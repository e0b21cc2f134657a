import numpy as np
import pytest
from hypothesis import settings, strategies as st

from bookspectra.graph import Graph, from_edges

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=1, max_n=12, connected=False):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for j in range(1, n) for i in range(j)]
    bits = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [p for p, b in zip(pairs, bits) if b]
    if connected:
        # a random spanning tree keeps the graph connected
        parents = [draw(st.integers(0, v - 1)) for v in range(1, n)]
        edges += [(p, v) for v, p in zip(range(1, n), parents)]
    return from_edges(n, edges)


def random_connected(n, rng, p=0.4):
    rows = [0] * n
    for v in range(1, n):
        u = int(rng.integers(v))
        rows[u] |= 1 << v
        rows[v] |= 1 << u
    for j in range(1, n):
        for i in range(j):
            if rng.random() < p:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
    return Graph(n, rows)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
