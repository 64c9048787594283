import math

import numpy as np
import pytest
from hypothesis import given, settings

from graphfki.errors import (
    BadParams,
    Disconnected,
    DuplicateEdge,
    EmptyRadii,
    NonPositiveWeight,
    SelfLoop,
    ThetaOutOfRange,
    UnknownVertex,
)
from graphfki.graph import (
    Exhaustion,
    Potential,
    ZeroMetric,
    build_graph,
    default_intrinsic_metric,
    generate,
    l2_summability_report,
    make_exhaustion,
    verify_intrinsic,
    weighted_degree,
    wrap_phase,
)

from conftest import random_graph_strategy


def test_build_two_vertex_antisymmetry():
    g, th = build_graph([(0, 1, 1.0, math.pi / 2)], {0: 1.0, 1: 1.0})
    assert g.n == 2
    assert th(0, 1) == math.pi / 2
    assert th(1, 0) == -math.pi / 2


def test_reverse_orientation_is_canonicalized():
    g, th = build_graph([(1, 0, 2.0, 0.3)], [1.0, 1.0])
    assert th(0, 1) == -0.3
    assert g.weight(1, 0) == g.weight(0, 1) == 2.0


@pytest.mark.parametrize("edges, measure, exc", [
    ([(0, 1, 1, 0), (2, 3, 1, 0)], [1] * 4, Disconnected),
    ([(0, 0, 1, 0)], [1], SelfLoop),
    ([(0, 1, 1, 0), (1, 0, 1, 0)], [1, 1], DuplicateEdge),
    ([(0, 1, 0.0, 0)], [1, 1], NonPositiveWeight),
    ([(0, 1, -1.0, 0)], [1, 1], NonPositiveWeight),
    ([(0, 1, 1.0, 3.5)], [1, 1], ThetaOutOfRange),
    ([(0, 5, 1.0, 0)], [1, 1], UnknownVertex),
])
def test_build_errors(edges, measure, exc):
    with pytest.raises(exc):
        build_graph(edges, measure)


def test_single_vertex_graph():
    g, th = build_graph([], [2.0])
    assert weighted_degree(g, 0) == (0.0, 0.0)


def test_theta_zero_off_edges():
    g, th, _ = generate("path", n=3, theta=0.4)
    assert th(0, 2) == 0.0
    assert th(1, 1) == 0.0


def test_weighted_degree_examples():
    g, _, _ = generate("path", n=3)
    assert weighted_degree(g, 1) == (2.0, 2.0)
    assert weighted_degree(g, 0) == (1.0, 1.0)
    star, _, _ = generate("star", k=2, b=[1.0, 2.0], m_center=0.5)
    assert weighted_degree(star, 0) == (6.0, 3.0)
    with pytest.raises(UnknownVertex):
        weighted_degree(g, 7)


def test_default_metric_examples():
    g, _, _ = generate("path", n=4)
    d = default_intrinsic_metric(g)
    assert d.edge_length(1, 2) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert d.edge_length(0, 1) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    g2, _ = build_graph([(0, 1, 1.0)], [1, 1])
    assert default_intrinsic_metric(g2)(0, 1) == 1.0


def test_min_rule_metric_values():
    g, _, _ = generate("path", n=4)
    d = default_intrinsic_metric(g, rule="min")
    assert d.edge_length(0, 1) == 1.0
    assert d.edge_length(1, 2) == pytest.approx(1 / math.sqrt(2), rel=1e-15)


def test_verify_intrinsic_examples():
    g, _, _ = generate("path", n=4)
    slack = verify_intrinsic(g, default_intrinsic_metric(g))
    # interior: 1 - 2 * (1/sqrt 2)^2
    assert slack[1] == pytest.approx(0.0, abs=1e-15)
    assert slack[0] == pytest.approx(0.5, abs=1e-15)
    lit = verify_intrinsic(g, default_intrinsic_metric(g, rule="min"))
    # endpoint: 1 - 1 * 1^2; interior picks up 1 + 1/2
    assert lit[0] == pytest.approx(0.0, abs=1e-15)
    assert lit[1] == pytest.approx(-0.5, abs=1e-15)
    np.testing.assert_array_equal(verify_intrinsic(g, ZeroMetric(g)), g.m)


def test_exhaustion_examples():
    g, _, _ = generate("path", n=5)
    assert make_exhaustion(g, 2, [1, 2]).sets == ((1, 2, 3), (0, 1, 2, 3, 4))
    assert make_exhaustion(g, 2, [0]).sets == ((2,),)
    c, _, _ = generate("cycle", n=6)
    assert make_exhaustion(c, 0, [1]).sets == ((0, 1, 5),)
    with pytest.raises(EmptyRadii):
        make_exhaustion(g, 2, [])
    with pytest.raises(BadParams):
        make_exhaustion(g, 2, [2, 1])


def test_intrinsic_exhaustion_nested():
    g, _, _ = generate("grid", rows=4, cols=4)
    ex = make_exhaustion(g, 5, [0.5, 1.0, 2.0, 4.0], metric="intrinsic")
    for a, b in zip(ex, list(ex)[1:]):
        assert set(a) <= set(b)


def test_exhaustion_rejects_non_nested():
    with pytest.raises(Exception):
        Exhaustion(((0, 1), (1, 2)))


def test_generators():
    g, _, _ = generate("path", n=3)
    assert [tuple(e) for e in g.edges] == [(0, 1), (1, 2)]
    s, _, _ = generate("star", k=3, b=[1, 2, 3])
    assert s.n == 4 and list(s.neighbors(0)) == [1, 2, 3]
    assert [s.weight(0, j) for j in (1, 2, 3)] == [1, 2, 3]
    bd, _, _ = generate("birth_death", n=20, beta_base=4.0)
    assert bd.weight(18, 19) == 4.0 ** 18
    gr, _, _ = generate("grid", rows=3, cols=3)
    assert gr.n_edges == 12
    with pytest.raises(BadParams):
        generate("torus", n=3)
    with pytest.raises(BadParams):
        generate("path", n=3, bogus=1)


def test_potential_parts():
    p = Potential([1.0, -2.0, 0.0])
    np.testing.assert_array_equal(p.plus, [1, 0, 0])
    np.testing.assert_array_equal(p.minus, [0, 2, 0])
    np.testing.assert_array_equal(p.plus - p.minus, p.values)


def test_wrap_phase_range():
    a = np.array([math.pi, -math.pi, 3.0 * math.pi, 0.1, -4.0])
    w = wrap_phase(a)
    assert np.all(w > -math.pi) and np.all(w <= math.pi)
    np.testing.assert_allclose(np.exp(1j * w), np.exp(1j * a), atol=1e-14)


def test_l2_summability_star():
    s, _, _ = generate("star", k=3, b=[1, 2, 3], m=[1, 1, 2, 3])
    rep = l2_summability_report(s)
    assert rep[0] == pytest.approx(1 + 1 + 1)
    assert rep[2] == pytest.approx((2 / 1) ** 2)


def test_graph_is_immutable():
    g, _, _ = generate("path", n=3)
    with pytest.raises(ValueError):
        g.m[0] = 5.0


@settings(max_examples=60, deadline=None)
@given(random_graph_strategy())
def test_invariants(data):
    g, th, _ = data
    for x in range(g.n):
        nb = g.neighbors(x)
        assert list(nb) == sorted(nb)
        assert sum(g.weight(x, y) for y in nb) == pytest.approx(g.deg1[x], rel=1e-15)
        assert g.degm[x] * g.m[x] == pytest.approx(g.deg1[x], rel=1e-12)
        for y in nb:
            assert g.weight(x, y) == g.weight(y, x)
            assert th(x, y) + th(y, x) == 0.0
    slack = verify_intrinsic(g, default_intrinsic_metric(g))
    assert np.all(slack >= -1e-12)
    ex = make_exhaustion(g, 0, [0, 1, 2, 3])
    for a, b in zip(ex, list(ex)[1:]):
        assert set(a) <= set(b)
