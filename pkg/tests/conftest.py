import math

import numpy as np
import pytest

from graphfki.graph import build_graph, generate

ACCEPTANCE_LINES = []

PI3 = math.pi / 3

FIXTURES = {
    "path5": ("path", {"n": 5}),
    "cycle6": ("cycle", {"n": 6}),
    "star4": ("star", {"k": 4}),
    "grid3x3": ("grid", {"rows": 3, "cols": 3}),
}


def fixture_graph(name, theta=0.0):
    family, params = FIXTURES[name]
    g, th, _ = generate(family, theta=theta, **params)
    return g, th


def mixed_potential(n):
    """Sign-alternating potential used across the fixture grid."""
    return np.where(np.arange(n) % 2 == 0, 1.0, -0.5)


def sample_function(n):
    k = np.arange(n)
    return (1.0 + k) / n + 0.3j * (-1.0) ** k


@pytest.fixture
def two_vertex():
    def make(alpha=0.0):
        return build_graph([(0, 1, 1.0, alpha)], [1.0, 1.0])
    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_graph_strategy(max_n=8):
    """Hypothesis strategy for connected graphs with phases and potentials."""
    from hypothesis import strategies as st

    @st.composite
    def build(draw):
        n = draw(st.integers(2, max_n))
        edges = {}
        for y in range(1, n):
            x = draw(st.integers(0, y - 1))
            edges[(x, y)] = None
        extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                              max_size=n))
        for a, b in extra:
            if a != b:
                edges[(min(a, b), max(a, b))] = None
        w = st.floats(0.1, 5.0)
        recs = [(a, b, draw(w), draw(st.floats(-math.pi, math.pi))) for a, b in edges]
        m = [draw(st.floats(0.2, 3.0)) for _ in range(n)]
        v = np.array([draw(st.floats(-2.0, 4.0)) for _ in range(n)])
        g, th = build_graph(recs, m)
        return g, th, v

    return build()
