"""Monte Carlo estimates of magnetic Schroedinger semigroups, kernels and
traces from sampled jump-process paths.

Each estimate averages the path weight ``1{t < tau} e^{S_t} f(X_t)``.
Paths censored at ``max_jumps`` contribute zero; the mass they could have
carried is reported as ``bias_bound`` instead of being guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StartOutsideSubset
from .graph import as_potential, as_theta
from .operator import as_function
from .process import simulate

LOW_HITS = 100


@dataclass(frozen=True)
class MCEstimate:
    mean: complex
    stderr: float
    n_samples: int
    censored_fraction: float
    bias_bound: float
    stderr_re: float = 0.0
    stderr_im: float = 0.0
    hits: int | None = None

    @property
    def low_hit_count(self):
        return self.hits is not None and self.hits < LOW_HITS

    def within(self, value, k=4.0):
        """True if |mean - value| <= k * stderr + bias_bound, per component.

        A floor of 1e-12 (relative) absorbs rounding in oracles that are
        real in exact arithmetic but carry ~1e-17 imaginary parts.
        """
        value = complex(value)
        d = self.mean - value
        floor = 1e-12 * (1.0 + abs(value))
        return (abs(d.real) <= k * self.stderr_re + self.bias_bound + floor
                and abs(d.imag) <= k * self.stderr_im + self.bias_bound + floor)

    def to_json(self, oracle=None):
        out = {
            "mean_re": float(self.mean.real),
            "mean_im": float(self.mean.imag),
            "stderr": float(self.stderr),
            "n": int(self.n_samples),
            "censored_fraction": float(self.censored_fraction),
            "bias_bound": float(self.bias_bound),
        }
        if self.hits is not None:
            out["hits"] = int(self.hits)
            out["low_hit_count"] = self.low_hit_count
        if oracle is not None:
            oracle = complex(oracle)
            out["oracle"] = [oracle.real, oracle.imag]
            out["abs_error"] = abs(self.mean - oracle)
        return out


def _mean_and_stderr(x):
    """Correctly rounded mean and standard error of a real sample.

    ``math.fsum`` makes both independent of summation order.
    """
    n = len(x)
    if n == 0:
        return 0.0, 0.0
    if np.all(x == x[0]):
        return float(x[0]), 0.0
    mean = math.fsum(x) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def summarize(values, censored, bias_scale, hits=None):
    values = np.asarray(values, dtype=complex)
    n = len(values)
    mre, sre = _mean_and_stderr(values.real)
    mim, sim = _mean_and_stderr(values.imag)
    cf = float(np.count_nonzero(censored)) / n if n else 0.0
    return MCEstimate(
        mean=complex(mre, mim),
        stderr=max(sre, sim),
        n_samples=n,
        censored_fraction=cf,
        bias_bound=cf * bias_scale if cf else 0.0,
        stderr_re=sre,
        stderr_im=sim,
        hits=hits,
    )


def path_weights(batch, f):
    """Per-sample ``e^{S_t} f(X_t)`` with censored and exited paths set to 0."""
    dead = batch.censored | batch.exited
    phase = np.cos(batch.line_integral) + 1j * np.sin(batch.line_integral)
    w = np.exp(-batch.potential_integral) * phase * f[batch.final_state]
    return np.where(dead, 0.0, w)


def _weight_bound(v, t):
    """Upper bound e^{t max(0, -min v)} for |e^{S_t}|."""
    return math.exp(t * max(0.0, -float(np.min(v))))


def fki_semigroup(g, v, theta, f, x, t, n_samples, seed=0, max_jumps=10_000,
                  sample_offset=0):
    """Estimate (e^{-tL} f)(x) by the Feynman-Kac-Ito average."""
    v = as_potential(g, v)
    theta = as_theta(g, theta)
    f = as_function(g, f)
    x = g.check_vertex(x)
    idx = sample_offset + np.arange(int(n_samples), dtype=np.int64)
    batch = simulate(g, x, t, seed, sample_index=idx, max_jumps=max_jumps,
                     theta=theta, v=v)
    scale = _weight_bound(v, t) * float(np.max(np.abs(f), initial=0.0))
    return summarize(path_weights(batch, f), batch.censored, scale)


def fki_dirichlet(g, v, theta, f, x, t, U, n_samples, seed=0, max_jumps=10_000):
    """Estimate e^{-tL^(U)} f(x); paths leaving U before t are killed."""
    v = as_potential(g, v)
    theta = as_theta(g, theta)
    x = g.check_vertex(x)
    U = sorted({g.check_vertex(int(z)) for z in U})
    if x not in U:
        raise StartOutsideSubset(f"start vertex {x} is not in U")
    mask = np.zeros(g.n)
    mask[U] = 1.0
    f = as_function(g, f) * mask
    batch = simulate(g, x, t, seed, n_samples=n_samples, max_jumps=max_jumps,
                     theta=theta, v=v, subset=U)
    scale = _weight_bound(v[U], t) * float(np.max(np.abs(f), initial=0.0))
    return summarize(path_weights(batch, f), batch.censored, scale)


def fki_kernel(g, v, theta, x, y, t, n_samples, seed=0, max_jumps=10_000,
               sample_offset=0):
    """Estimate the kernel e^{-tL}(x, y) by terminal-state filtering.

    E_x[1{t<tau} 1{X_t = y} e^{S_t}] / m(y) equals the bridge form
    P_x(X_t = y) E^t_{x,y}[e^{S_t}] / m(y), so no bridge sampler is needed.
    """
    v = as_potential(g, v)
    theta = as_theta(g, theta)
    x = g.check_vertex(x)
    y = g.check_vertex(y)
    if t <= 0:
        raise ValueError("kernel estimation needs t > 0")
    f = np.zeros(g.n, dtype=complex)
    f[y] = 1.0 / g.m[y]
    idx = sample_offset + np.arange(int(n_samples), dtype=np.int64)
    batch = simulate(g, x, t, seed, sample_index=idx, max_jumps=max_jumps,
                     theta=theta, v=v)
    hits = int(np.count_nonzero((batch.final_state == y) & ~batch.censored))
    scale = _weight_bound(v, t) / g.m[y]
    return summarize(path_weights(batch, f), batch.censored, scale, hits=hits)


def fki_trace(g, v, theta, U, t, n_samples_per_vertex, seed=0, max_jumps=10_000):
    """Estimate tr e^{-tL} restricted to U as sum_x m(x) K(x, x).

    Vertex number j of sorted U uses stream indices
    ``j*n .. (j+1)*n - 1`` so diagonal estimates are independent.
    """
    U = sorted({g.check_vertex(int(z)) for z in (range(g.n) if U is None else U)})
    n = int(n_samples_per_vertex)
    total = []
    var_re = var_im = 0.0
    censored = 0
    bias = 0.0
    hits = 0
    for j, x in enumerate(U):
        est = fki_kernel(g, v, theta, x, x, t, n, seed, max_jumps, sample_offset=j * n)
        mx = float(g.m[x])
        total.append(mx * est.mean)
        var_re += (mx * est.stderr_re) ** 2
        var_im += (mx * est.stderr_im) ** 2
        censored += round(est.censored_fraction * n)
        bias += mx * est.bias_bound
        hits += est.hits
    mean = complex(math.fsum(z.real for z in total), math.fsum(z.imag for z in total))
    sre, sim = math.sqrt(var_re), math.sqrt(var_im)
    return MCEstimate(mean, max(sre, sim), n * len(U), censored / (n * len(U)),
                      bias, sre, sim, hits)
