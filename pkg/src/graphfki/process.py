"""Continuous-time jump process on a weighted graph and its path functionals.

The jump chain moves from y to x with probability b(x, y)/deg_1(y); the
holding time at y is xi / deg_m(y) with xi ~ Exp(1).  All randomness for
sample ``i`` comes from the counter-based stream ``(seed, i)`` in
:mod:`graphfki.rng`: step ``k`` uses lane 0 for the k-th holding time and
lane 1 for the k-th jump target.

:func:`simulate` advances a whole batch of samples at once and accumulates
the line integral of theta and the time integral of v on the fly.  The
single-path API (:func:`sample_trajectory` and friends) runs the same
engine on a batch of one, so both routes produce identical paths.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import (
    CensoredBeforeExit,
    CensoredTrajectory,
    NonPositiveHorizon,
    UnknownVertex,
)
from .graph import as_potential, as_theta

CHUNK = 8192
WORKERS_ENV = "GRAPHFKI_WORKERS"


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class PathBatch:
    """Per-sample results of :func:`simulate` (arrays of length n)."""

    sample_index: np.ndarray
    final_state: np.ndarray
    n_jumps: np.ndarray
    line_integral: np.ndarray
    potential_integral: np.ndarray
    censored: np.ndarray
    exited: np.ndarray
    exit_time: np.ndarray
    states: list = field(default=None)
    times: list = field(default=None)

    def __len__(self):
        return len(self.sample_index)


def _run_chunk(g, starts, t, key, sample_index, max_jumps, theta_dir, v,
               inside, record):
    n = len(sample_index)
    state = starts.astype(np.int64).copy()
    time = np.zeros(n)
    n_jumps = np.zeros(n, dtype=np.int64)
    line = np.zeros(n)
    pot = np.zeros(n)
    censored = np.zeros(n, dtype=bool)
    exited = np.zeros(n, dtype=bool)
    exit_time = np.full(n, np.inf)
    if record:
        states = [[int(s)] for s in state]
        times = [[] for _ in range(n)]

    degm = g.degm
    table = g.jump_table
    indptr = g.indptr
    active = np.arange(n)
    if inside is not None:
        out0 = ~inside[state]
        exited[out0] = True
        exit_time[out0] = 0.0
        active = active[~out0]

    k = 0
    while len(active):
        s = state[active]
        xi = rng.exponential(key, sample_index[active], k)
        rate = degm[s]
        with np.errstate(divide="ignore"):
            hold = np.where(rate > 0, xi / np.where(rate > 0, rate, 1.0), np.inf)
        t_next = time[active] + hold
        stop = ~(t_next <= t)

        fin = active[stop]
        if len(fin):
            pot[fin] += v[state[fin]] * (t - time[fin])

        go = active[~stop]
        if not len(go):
            break
        if k == max_jumps:
            censored[go] = True
            break
        hold_go = t_next[~stop] - time[go]
        pot[go] += v[state[go]] * hold_go
        time[go] = t_next[~stop]

        sg = state[go]
        u = rng.uniform(key, sample_index[go], k, rng.LANE_JUMP)
        pos = np.searchsorted(table, sg + u, side="right")
        pos = np.minimum(pos, indptr[sg + 1] - 1)
        nxt = g.nbr[pos]
        line[go] += theta_dir[pos]
        state[go] = nxt
        n_jumps[go] += 1
        if record:
            for i, y, tau in zip(go, nxt, time[go]):
                states[i].append(int(y))
                times[i].append(float(tau))

        keep = np.ones(len(go), dtype=bool)
        if inside is not None:
            left = ~inside[nxt]
            exited[go[left]] = True
            exit_time[go[left]] = time[go[left]]
            keep = ~left
        active = go[keep]
        k += 1

    batch = PathBatch(sample_index, state, n_jumps, line, pot, censored,
                      exited, exit_time)
    if record:
        batch.states = states
        batch.times = times
    return batch


def simulate(g, x, t, seed, n_samples=None, sample_index=None, max_jumps=10_000,
             theta=None, v=None, subset=None, record=False, workers=None):
    """Simulate independent paths up to time ``t``.

    Parameters
    ----------
    x : int or array of ints
        Start vertex, shared or per sample.
    sample_index : array of ints, optional
        Stream indices; defaults to ``arange(n_samples)``.
    subset : iterable of vertices, optional
        When given, a path is stopped at its first exit from the subset
        (``exited`` is set and its functionals are frozen at the exit).
    record : bool
        Keep the full list of states and jump times per sample.

    Work is split into fixed chunks of indices and merged in index order,
    so the output does not depend on the number of workers.
    """
    if t < 0:
        raise NonPositiveHorizon(f"horizon t = {t} < 0")
    if max_jumps < 1:
        raise ValueError("max_jumps must be >= 1")
    if sample_index is None:
        sample_index = np.arange(int(n_samples), dtype=np.int64)
    sample_index = np.asarray(sample_index, dtype=np.int64)
    n = len(sample_index)
    starts = np.broadcast_to(np.asarray(x, dtype=np.int64), (n,))
    if n and (starts.min() < 0 or starts.max() >= g.n):
        raise UnknownVertex(f"start vertex outside 0..{g.n - 1}")
    theta_dir = as_theta(g, theta).directed
    v = as_potential(g, v)
    inside = None
    if subset is not None:
        inside = np.zeros(g.n, dtype=bool)
        inside[[g.check_vertex(int(z)) for z in subset]] = True
    key = rng.seed_key(seed)

    bounds = [(a, min(a + CHUNK, n)) for a in range(0, n, CHUNK)] or [(0, 0)]

    def job(ab):
        a, b = ab
        return _run_chunk(g, starts[a:b], float(t), key, sample_index[a:b],
                          int(max_jumps), theta_dir, v, inside, record)

    workers = worker_count() if workers is None else workers
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, bounds))
    else:
        parts = [job(ab) for ab in bounds]
    if len(parts) == 1:
        return parts[0]
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    out = PathBatch(*(cat(name) for name in (
        "sample_index", "final_state", "n_jumps", "line_integral",
        "potential_integral", "censored", "exited", "exit_time")))
    if record:
        out.states = [s for p in parts for s in p.states]
        out.times = [s for p in parts for s in p.times]
    return out


# --------------------------------------------------------- single paths

@dataclass(frozen=True)
class Trajectory:
    """One sampled path: states Y_0..Y_N and jump times tau_1 < ... < tau_N."""

    start: int
    states: tuple
    jump_times: tuple
    horizon: float
    censored: bool
    sample_index: int = 0

    @property
    def n_jumps(self):
        return len(self.jump_times)

    def state_at(self, s):
        """X_s for 0 <= s <= horizon (right-continuous)."""
        k = int(np.searchsorted(np.asarray(self.jump_times), s, side="right"))
        return self.states[k]


@dataclass(frozen=True)
class ActionValue:
    line_integral: float
    potential_integral: float

    @property
    def action(self):
        return complex(-self.potential_integral, self.line_integral)

    @property
    def weight(self):
        """e^{S_t}."""
        return np.exp(-self.potential_integral) * complex(
            np.cos(self.line_integral), np.sin(self.line_integral))

    @property
    def modulus(self):
        """|e^{S_t}| = e^{-potential integral}."""
        return float(np.exp(-self.potential_integral))


def sample_trajectory(g, x, t, seed, sample_index=0, max_jumps=10_000):
    x = g.check_vertex(x)
    batch = simulate(g, x, t, seed, sample_index=[sample_index],
                     max_jumps=max_jumps, record=True, workers=1)
    return Trajectory(x, tuple(batch.states[0]), tuple(batch.times[0]),
                      float(t), bool(batch.censored[0]), int(sample_index))


def sample_trajectories(g, x, t, seed, n_samples, max_jumps=10_000):
    """Trajectories for sample indices ``0..n_samples-1`` from one batch run."""
    x = g.check_vertex(x)
    batch = simulate(g, x, t, seed, n_samples=n_samples, max_jumps=max_jumps,
                     record=True)
    return [Trajectory(x, tuple(st), tuple(tm), float(t), bool(c), int(i))
            for st, tm, c, i in zip(batch.states, batch.times, batch.censored,
                                     batch.sample_index)]


def _require_complete(traj):
    if traj.censored:
        raise CensoredTrajectory("trajectory was censored before the horizon")


BEYOND_HORIZON = float("inf")


def first_exit(traj, U):
    """First exit time from U, or ``BEYOND_HORIZON`` if the path stays in U."""
    U = set(int(z) for z in U)
    if traj.start not in U:
        return 0.0
    for y, tau in zip(traj.states[1:], traj.jump_times):
        if y not in U:
            return float(tau)
    if traj.censored:
        raise CensoredBeforeExit("path censored before leaving U or reaching the horizon")
    return BEYOND_HORIZON


def _clipped(traj, t):
    times = [tau for tau in traj.jump_times if tau <= t]
    return traj.states[:len(times) + 1], times


def line_integral(traj, theta, t=None):
    _require_complete(traj)
    t = traj.horizon if t is None else t
    states, _ = _clipped(traj, t)
    return float(sum(theta(a, b) for a, b in zip(states, states[1:])))


def potential_integral(traj, v, t=None):
    _require_complete(traj)
    t = traj.horizon if t is None else t
    states, times = _clipped(traj, t)
    bounds = [0.0] + list(times) + [t]
    total = 0.0
    for y, a, b in zip(states, bounds, bounds[1:]):
        total += float(v[y]) * (b - a)
    return total


def action(traj, v, theta, t=None):
    return ActionValue(line_integral(traj, theta, t), potential_integral(traj, v, t))


def dump_trajectories_csv(trajs, fh):
    """Rows (sample_index, step, vertex, jump_time, censored)."""
    fh.write("sample_index,step,vertex,jump_time,censored\n")
    for tr in trajs:
        times = (0.0,) + tuple(tr.jump_times)
        for step, (y, tau) in enumerate(zip(tr.states, times)):
            fh.write(f"{tr.sample_index},{step},{y},{tau!r},{int(tr.censored)}\n")
