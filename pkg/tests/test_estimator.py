import cmath
import json
import math

import numpy as np
import pytest

from graphfki.errors import StartOutsideSubset
from graphfki.estimator import (
    MCEstimate,
    fki_dirichlet,
    fki_kernel,
    fki_semigroup,
    fki_trace,
    path_weights,
)
from graphfki.graph import build_graph, generate
from graphfki.operator import assemble_finite, expm_reference
from graphfki.process import simulate

from conftest import FIXTURES, PI3, fixture_graph, mixed_potential, sample_function

N = 100_000


def oracle_apply(g, v, th, f, x, t, U=None):
    op = assemble_finite(g, v, th, U)
    E = expm_reference(op, t)
    return complex((E @ op.restrict(np.asarray(f, dtype=complex)))[op.index[x]])


def test_single_vertex_exact():
    g, th = build_graph([], [1.0])
    est = fki_semigroup(g, [0.7], th, [1.0], 0, 2.0, 1000)
    assert est.mean == math.exp(-0.7 * 2.0)
    assert est.stderr == 0.0 and est.bias_bound == 0.0


def test_two_vertex_semigroup(two_vertex):
    g, th = two_vertex(PI3)
    est = fki_semigroup(g, 0.0, th, {0: 1.0}, 0, 1.0, N, seed=1)
    assert est.within((1 + math.exp(-2)) / 2)
    assert est.n_samples == N and est.censored_fraction == 0.0


def test_constant_shift_is_exact_per_sample():
    g, th, _ = generate("cycle", n=5, theta=0.4)
    v = mixed_potential(5)
    f = sample_function(5)
    t, c = 0.9, 0.35
    b0 = simulate(g, 2, t, seed=3, n_samples=2000, theta=th, v=v)
    b1 = simulate(g, 2, t, seed=3, n_samples=2000, theta=th, v=v + c)
    np.testing.assert_allclose(path_weights(b1, f), path_weights(b0, f) * math.exp(-c * t),
                               rtol=1e-12, atol=1e-15)
    e0 = fki_semigroup(g, v, th, f, 2, t, 2000, seed=3)
    e1 = fki_semigroup(g, v + c, th, f, 2, t, 2000, seed=3)
    assert e1.mean == pytest.approx(e0.mean * math.exp(-c * t), rel=1e-12)


def test_dirichlet_examples(two_vertex):
    g, th = two_vertex(PI3)
    est = fki_dirichlet(g, 0.0, th, {0: 1.0}, 0, 1.0, [0], N, seed=2)
    assert est.within(math.exp(-1.0))
    assert abs(est.mean - 0.3678794) <= 4 * est.stderr + 1e-7
    zero = fki_dirichlet(g, 0.0, th, 0.0, 0, 1.0, [0, 1], 1000)
    assert zero.mean == 0 and zero.stderr == 0
    with pytest.raises(StartOutsideSubset):
        fki_dirichlet(g, 0.0, th, 1.0, 1, 1.0, [0], 10)


def test_dirichlet_whole_host_matches_semigroup():
    g, th = fixture_graph("grid3x3", PI3)
    v = mixed_potential(9)
    f = sample_function(9)
    a = fki_semigroup(g, v, th, f, 4, 1.0, 5000, seed=7)
    b = fki_dirichlet(g, v, th, f, 4, 1.0, range(9), 5000, seed=7)
    assert a == b


def test_dirichlet_proper_subset_against_oracle():
    g, th = fixture_graph("path5", PI3)
    v = mixed_potential(5)
    f = sample_function(5)
    U = [0, 1, 2, 3]
    est = fki_dirichlet(g, v, th, f, 1, 1.0, U, N, seed=5)
    assert est.within(oracle_apply(g, v, th, f, 1, 1.0, U))


def test_kernel_two_vertex(two_vertex):
    g, th = two_vertex(PI3)
    est = fki_kernel(g, 0.0, th, 0, 1, 1.0, N, seed=9)
    mag = abs(est.mean)
    assert abs(mag - (1 - math.exp(-2)) / 2) <= 4 * est.stderr
    # delta method: phase error ~ stderr / |K|
    assert abs(cmath.phase(est.mean) - PI3) <= 4 * est.stderr / mag
    diag = fki_kernel(g, 0.0, th, 0, 0, 1.0, N, seed=9)
    assert abs(diag.mean.imag) <= 4 * diag.stderr_im + 1e-15
    assert diag.hits > 100 and not diag.low_hit_count


def test_kernel_equilibrium():
    g, th, _ = generate("path", n=5, m=[1, 2, 1, 0.5, 1.5])
    est = fki_kernel(g, 0.0, th, 0, 3, 50.0, N, seed=4)
    oracle = expm_reference(assemble_finite(g, 0.0, th), 50.0)[0, 3] / g.m[3]
    # spectral gap is small here; the residual at t=50 is ~3e-7 relative
    assert oracle == pytest.approx(1 / g.m.sum(), rel=1e-6)
    assert est.within(1 / g.m.sum())


def test_kernel_low_hits_flag():
    g, th, _ = generate("path", n=8)
    est = fki_kernel(g, 0.0, th, 0, 7, 0.3, 2000, seed=1)
    assert est.low_hit_count
    assert est.to_json()["low_hit_count"] is True


def test_trace_examples(two_vertex):
    g, th = two_vertex(PI3)
    est = fki_trace(g, 0.0, th, None, 1.0, N, seed=2)
    assert est.within(1 + math.exp(-2))
    assert abs(est.mean.imag) <= 4 * est.stderr_im + 1e-15
    gc, thc = fixture_graph("cycle6", PI3)
    small = fki_trace(gc, mixed_potential(6), thc, range(6), 1e-3, 2000, seed=1)
    tol = 2 * 6 * 1e-3 * float(np.max(gc.degm + np.abs(mixed_potential(6))))
    assert abs(small.mean - 6) <= tol


def test_trace_against_oracle():
    g, th = fixture_graph("star4", PI3)
    v = mixed_potential(5)
    U = [0, 1, 2]
    est = fki_trace(g, v, th, U, 0.5, 40_000, seed=8)
    op = assemble_finite(g, v, th)
    E = expm_reference(op, 0.5)
    oracle = sum(E[x, x] for x in U)
    assert est.within(oracle)


@pytest.mark.parametrize("name", list(FIXTURES))
def test_oracle_agreement_mixed(name):
    g, th = fixture_graph(name, PI3)
    v = mixed_potential(g.n)
    f = sample_function(g.n)
    est = fki_semigroup(g, v, th, f, 0, 1.0, 50_000, seed=12)
    assert est.within(oracle_apply(g, v, th, f, 0, 1.0))
    assert est.censored_fraction == 0.0


def test_stderr_rate():
    g, th = fixture_graph("cycle6", PI3)
    f = sample_function(6)
    a = fki_semigroup(g, 0.0, th, f, 0, 1.0, 10_000, seed=1)
    b = fki_semigroup(g, 0.0, th, f, 0, 1.0, 40_000, seed=1)
    assert 0.4 <= b.stderr / a.stderr <= 0.6


def test_censoring_reports_bias_bound():
    g, th, _ = generate("birth_death", n=20, beta_base=4.0)
    v = np.full(20, -0.5)
    est = fki_semigroup(g, v, th, 2.0, 0, 1.0, 2000, seed=0, max_jumps=5)
    assert est.censored_fraction > 0
    assert est.bias_bound == pytest.approx(est.censored_fraction * math.exp(0.5) * 2.0)
    clean = fki_semigroup(g, 0.0, th, 1.0, 0, 1e-3, 200, max_jumps=10_000)
    assert clean.censored_fraction == 0 and clean.bias_bound == 0


def test_determinism_and_workers(monkeypatch):
    g, th = fixture_graph("grid3x3", PI3)
    args = (g, mixed_potential(9), th, sample_function(9), 0, 1.0, 30_000)
    monkeypatch.setenv("GRAPHFKI_WORKERS", "1")
    a = fki_semigroup(*args, seed=5)
    monkeypatch.setenv("GRAPHFKI_WORKERS", "3")
    b = fki_semigroup(*args, seed=5)
    assert a == b
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())


def test_json_fields():
    est = MCEstimate(1 + 2j, 0.1, 10, 0.0, 0.0, 0.1, 0.05)
    out = est.to_json(oracle=1 + 2.5j)
    assert set(out) == {"mean_re", "mean_im", "stderr", "n", "censored_fraction",
                        "bias_bound", "oracle", "abs_error"}
    assert out["abs_error"] == pytest.approx(0.5)
