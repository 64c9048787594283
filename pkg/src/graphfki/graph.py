"""Weighted graphs (X, b, m), magnetic and scalar potentials, exhaustions,
path metrics and fixture generators.

Vertices are dense integer ids ``0..n-1``.  Edge data is stored once per
undirected edge in canonical orientation (low id -> high id); adjacency is
held in CSR form with neighbours sorted by id so that every iteration order
is fixed.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra, shortest_path

from .errors import (
    BadParams,
    Disconnected,
    DuplicateEdge,
    EmptyRadii,
    GraphError,
    NonPositiveMeasure,
    NonPositiveWeight,
    SelfLoop,
    ThetaOutOfRange,
    UnknownVertex,
)

PI = math.pi


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def wrap_phase(a):
    """Reduce phases to the half-open interval (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    return PI - np.mod(PI - a, 2 * PI)


class WeightedGraph:
    """Immutable connected weighted graph.

    Parameters
    ----------
    m : array of shape (n,)
        Vertex measure, strictly positive.
    edges : array of shape (E, 2)
        Canonical edges ``u < v``, sorted lexicographically.
    b : array of shape (E,)
        Edge weights, strictly positive.

    Use :func:`build_graph` or :func:`generate` rather than calling this
    directly; they validate the input.
    """

    def __init__(self, m, edges, b):
        self.m = _readonly(np.asarray(m, dtype=float))
        self.edges = _readonly(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        self.b = _readonly(np.asarray(b, dtype=float))
        n = self.n
        E = len(self.b)

        # directed copies, sorted by (source, target)
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(E), np.arange(E)])
        sign = np.concatenate([np.ones(E), -np.ones(E)])
        order = np.lexsort((dst, src))
        self.nbr = _readonly(dst[order])
        self.nbr_b = _readonly(self.b[eid[order]] if E else np.zeros(0))
        self.nbr_edge = _readonly(eid[order])
        self.nbr_sign = _readonly(sign[order])
        self.nbr_src = _readonly(src[order])
        self.indptr = _readonly(
            np.searchsorted(src[order], np.arange(n + 1), side="left"))

        deg1 = np.zeros(n)
        np.add.at(deg1, self.nbr_src, self.nbr_b)
        self.deg1 = _readonly(deg1)
        self.degm = _readonly(deg1 / self.m)

    @property
    def n(self):
        return len(self.m)

    @property
    def n_edges(self):
        return len(self.b)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, edges={self.n_edges})"

    def check_vertex(self, x):
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise UnknownVertex(f"vertex id must be an integer, got {x!r}")
        if not 0 <= x < self.n:
            raise UnknownVertex(f"unknown vertex {x}")
        return int(x)

    def neighbors(self, x):
        x = self.check_vertex(x)
        return self.nbr[self.indptr[x]:self.indptr[x + 1]]

    def weight(self, x, y):
        """b(x, y); zero for non-adjacent pairs and for x == y."""
        x = self.check_vertex(x)
        y = self.check_vertex(y)
        lo, hi = self.indptr[x], self.indptr[x + 1]
        k = lo + np.searchsorted(self.nbr[lo:hi], y)
        if k < hi and self.nbr[k] == y:
            return float(self.nbr_b[k])
        return 0.0

    def edge_index(self, x, y):
        """Position of the undirected edge {x, y} in ``edges``, or -1."""
        lo, hi = self.indptr[x], self.indptr[x + 1]
        k = lo + np.searchsorted(self.nbr[lo:hi], y)
        if k < hi and self.nbr[k] == y:
            return int(self.nbr_edge[k])
        return -1

    @cached_property
    def adjacency(self):
        """Sparse symmetric matrix of edge weights b."""
        return csr_matrix(
            (self.nbr_b, self.nbr, self.indptr), shape=(self.n, self.n))

    @cached_property
    def jump_table(self):
        """Row-offset cumulative jump probabilities.

        Entry ``k`` in row ``x`` holds ``x + sum_{j<=k} b(x, y_j)/deg_1(x)``,
        with the row's last entry forced to exactly ``x + 1``.  A uniform
        ``u`` picks the first neighbour whose cumulative mass exceeds ``u``
        via a single ``searchsorted`` over all rows.
        """
        cum = np.zeros(len(self.nbr))
        for x in range(self.n):
            lo, hi = self.indptr[x], self.indptr[x + 1]
            if hi > lo:
                c = np.cumsum(self.nbr_b[lo:hi]) / self.deg1[x]
                c[-1] = 1.0
                cum[lo:hi] = x + c
        return _readonly(cum)


class MagneticPotential:
    """Antisymmetric edge phase theta with values in [-pi, pi].

    ``values[k]`` is theta(u, v) for the canonical edge ``edges[k] = (u, v)``
    with ``u < v``; the reverse orientation is obtained by negation.
    """

    def __init__(self, graph: WeightedGraph, values=None):
        self.graph = graph
        if values is None:
            values = np.zeros(graph.n_edges)
        values = np.asarray(values, dtype=float)
        if values.shape != (graph.n_edges,):
            raise BadParams(
                f"expected {graph.n_edges} edge phases, got shape {values.shape}")
        bad = np.flatnonzero(~(np.abs(values) <= PI))
        if len(bad):
            k = bad[0]
            u, v = graph.edges[k]
            raise ThetaOutOfRange(
                f"theta({u},{v}) = {values[k]!r} is outside [-pi, pi]")
        self.values = _readonly(values)

    @classmethod
    def zero(cls, graph):
        return cls(graph)

    def __call__(self, x, y):
        g = self.graph
        x = g.check_vertex(x)
        y = g.check_vertex(y)
        k = g.edge_index(x, y)
        if k < 0:
            return 0.0
        val = float(self.values[k])
        return val if x < y else -val

    @cached_property
    def directed(self):
        """theta(x, y) aligned with the graph's CSR neighbour arrays."""
        return _readonly(self.graph.nbr_sign * self.values[self.graph.nbr_edge])

    @cached_property
    def phases(self):
        """exp(i theta(x, y)) aligned with the CSR neighbour arrays."""
        return _readonly(np.exp(1j * self.directed))

    def is_zero(self):
        return not np.any(self.values)

    def gauge(self, phi):
        """theta'(x,y) = theta(x,y) + phi(x) - phi(y), wrapped to (-pi, pi]."""
        phi = np.asarray(phi, dtype=float)
        u, v = self.graph.edges[:, 0], self.graph.edges[:, 1]
        return MagneticPotential(self.graph, wrap_phase(self.values + phi[u] - phi[v]))


@dataclass(frozen=True)
class Potential:
    """Real vertex function v with positive and negative parts."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _readonly(np.asarray(self.values, dtype=float)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    @property
    def plus(self):
        return np.maximum(self.values, 0.0)

    @property
    def minus(self):
        return np.maximum(-self.values, 0.0)


def as_potential(g, v):
    """Dense float array for a potential given as scalar, array or mapping."""
    if v is None:
        return np.zeros(g.n)
    if isinstance(v, Mapping):
        out = np.zeros(g.n)
        for k, val in v.items():
            out[g.check_vertex(int(k))] = float(val)
        return out
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        return np.full(g.n, float(arr))
    if arr.shape != (g.n,):
        raise BadParams(f"potential has shape {arr.shape}, graph has {g.n} vertices")
    return arr


def as_theta(g, theta):
    if theta is None:
        return MagneticPotential.zero(g)
    if isinstance(theta, MagneticPotential):
        if theta.graph is not g and theta.graph.n_edges != g.n_edges:
            raise BadParams("magnetic potential belongs to a different graph")
        return theta
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0:
        arr = np.full(g.n_edges, float(arr))
    return MagneticPotential(g, arr)


def build_graph(edge_list: Iterable[Sequence], measure) -> tuple[WeightedGraph, MagneticPotential]:
    """Validate an edge list and measure and build ``(graph, theta)``.

    ``edge_list`` holds tuples ``(x, y, b)`` or ``(x, y, b, theta)`` where
    theta is the phase for the orientation x -> y.  ``measure`` is a mapping
    or sequence over the vertex ids, which must be exactly ``0..n-1``.
    """
    if isinstance(measure, Mapping):
        keys = sorted(int(k) for k in measure)
        if keys != list(range(len(keys))):
            raise GraphError("vertex ids must be exactly 0..n-1")
        m = np.array([float(measure[k]) for k in keys])
    else:
        m = np.asarray(measure, dtype=float).ravel()
    n = len(m)
    if n == 0:
        raise GraphError("graph has no vertices")
    bad = np.flatnonzero(~(m > 0) | ~np.isfinite(m))
    if len(bad):
        raise NonPositiveMeasure(f"m({bad[0]}) = {m[bad[0]]!r} is not positive")

    seen = {}
    for rec in edge_list:
        if len(rec) == 3:
            x, y, w = rec
            th = 0.0
        elif len(rec) == 4:
            x, y, w, th = rec
        else:
            raise BadParams(f"edge record must have 3 or 4 fields: {rec!r}")
        x, y, w, th = int(x), int(y), float(w), float(th)
        for z in (x, y):
            if not 0 <= z < n:
                raise UnknownVertex(f"edge ({x},{y}) references unknown vertex {z}")
        if x == y:
            raise SelfLoop(f"self-loop at vertex {x}")
        if not (w > 0 and math.isfinite(w)):
            raise NonPositiveWeight(f"b({x},{y}) = {w!r} is not positive")
        if not abs(th) <= PI:
            raise ThetaOutOfRange(f"theta({x},{y}) = {th!r} is outside [-pi, pi]")
        key = (min(x, y), max(x, y))
        if key in seen:
            raise DuplicateEdge(f"edge {key} listed twice")
        seen[key] = (w, th if x < y else -th)

    keys = sorted(seen)
    edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
    b = np.array([seen[k][0] for k in keys])
    theta = np.array([seen[k][1] for k in keys])
    g = WeightedGraph(m, edges, b)
    if n > 1:
        ncomp, _ = connected_components(g.adjacency, directed=False)
        if ncomp > 1:
            raise Disconnected(f"graph has {ncomp} connected components")
    return g, MagneticPotential(g, theta)


def weighted_degree(g: WeightedGraph, x) -> tuple[float, float]:
    """Return ``(deg_m(x), deg_1(x))``."""
    x = g.check_vertex(x)
    return float(g.degm[x]), float(g.deg1[x])


def l2_summability_report(g):
    """Per-vertex sum over neighbours of (b(x,y)/m(y))**2.

    On a finite host every entry is finite; the report only documents the
    numbers, it does not decide anything about infinite graphs.
    """
    out = np.zeros(g.n)
    np.add.at(out, g.nbr_src, (g.nbr_b / g.m[g.nbr]) ** 2)
    return out


# ---------------------------------------------------------------- metrics

class PathMetric:
    """Path metric generated by positive edge lengths sigma."""

    def __init__(self, g, sigma):
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != (g.n_edges,):
            raise BadParams("sigma must have one entry per edge")
        if np.any(sigma <= 0):
            raise BadParams("edge lengths must be positive")
        self.graph = g
        self.sigma = _readonly(sigma)

    @cached_property
    def dist(self):
        g = self.graph
        w = csr_matrix((self.sigma[g.nbr_edge], g.nbr, g.indptr), shape=(g.n, g.n))
        return _readonly(dijkstra(w, directed=False))

    def __call__(self, x, y):
        return float(self.dist[self.graph.check_vertex(x), self.graph.check_vertex(y)])

    def edge_length(self, x, y):
        k = self.graph.edge_index(x, y)
        if k < 0:
            raise BadParams(f"{x} and {y} are not adjacent")
        return float(self.sigma[k])


class ZeroMetric:
    """The zero pseudo-metric."""

    def __init__(self, g):
        self.graph = g
        self.dist = _readonly(np.zeros((g.n, g.n)))

    def __call__(self, x, y):
        return 0.0


def default_intrinsic_metric(g, rule="max"):
    """Path metric with edge weights sigma(x,y) = agg(deg_m(x), deg_m(y)) ** -1/2.

    ``rule="max"`` gives sigma**2 <= 1/deg_m at both endpoints, hence
    sum_y b(x,y) d(x,y)**2 <= m(x) everywhere.  ``rule="min"`` is the
    literal min-of-degrees weight; it can fail to be intrinsic where
    degrees differ (path 0-1-2: slack -1/2 at the middle vertex).
    """
    u, v = g.edges[:, 0], g.edges[:, 1]
    if rule == "max":
        deg = np.maximum(g.degm[u], g.degm[v])
    elif rule == "min":
        deg = np.minimum(g.degm[u], g.degm[v])
    else:
        raise BadParams(f"unknown sigma rule {rule!r}")
    return PathMetric(g, deg ** -0.5)


def verify_intrinsic(g, d):
    """Slack m(x) - sum_y b(x,y) d(x,y)**2 per vertex; intrinsic iff all >= 0."""
    dist = d.dist if hasattr(d, "dist") else np.asarray(d)
    terms = g.nbr_b * dist[g.nbr_src, g.nbr] ** 2
    acc = np.zeros(g.n)
    np.add.at(acc, g.nbr_src, terms)
    return g.m - acc


# ------------------------------------------------------------- exhaustions

@dataclass(frozen=True)
class Exhaustion:
    """Nested finite vertex sets X_1 <= X_2 <= ..."""

    sets: tuple

    def __post_init__(self):
        sets = tuple(tuple(sorted(int(x) for x in s)) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        for a, b in zip(sets, sets[1:]):
            if not set(a) <= set(b):
                raise GraphError("exhaustion sets are not nested")

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def __getitem__(self, k):
        return self.sets[k]

    def covers(self, g):
        return len(self.sets) > 0 and len(self.sets[-1]) == g.n


def make_exhaustion(g, x0, radii, metric="combinatorial"):
    """Balls of the given radii around ``x0``.

    ``metric`` is ``"combinatorial"`` (hop count), ``"intrinsic"`` (the
    default intrinsic metric) or a :class:`PathMetric`.
    """
    x0 = g.check_vertex(x0)
    radii = list(radii)
    if not radii:
        raise EmptyRadii("at least one radius is required")
    if any(r1 <= r0 for r0, r1 in zip(radii, radii[1:])):
        raise BadParams("radii must be strictly increasing")
    if metric == "combinatorial":
        d = shortest_path(g.adjacency, unweighted=True, directed=False, indices=x0)
    elif metric == "intrinsic":
        d = default_intrinsic_metric(g).dist[x0]
    elif isinstance(metric, PathMetric):
        d = metric.dist[x0]
    else:
        raise BadParams(f"unknown metric {metric!r}")
    return Exhaustion(tuple(tuple(np.flatnonzero(d <= r).tolist()) for r in radii))


# -------------------------------------------------------------- generators

def _per_item(val, count, name):
    arr = np.asarray(val, dtype=float)
    if arr.ndim == 0:
        return np.full(count, float(arr))
    if arr.shape != (count,):
        raise BadParams(f"{name} needs {count} entries, got {arr.shape}")
    return arr


def _assemble(n, pairs, b, m, theta, v):
    pairs = list(pairs)
    b = _per_item(b, len(pairs), "b")
    theta = _per_item(theta, len(pairs), "theta")
    m = _per_item(m, n, "m")
    recs = [(x, y, bb, th) for (x, y), bb, th in zip(pairs, b, theta)]
    g, th = build_graph(recs, m)
    return g, th, Potential(_per_item(v, n, "v"))


def path_graph(n, b=1.0, m=1.0, theta=0.0, v=0.0):
    if n < 1:
        raise BadParams("path needs n >= 1")
    return _assemble(n, [(k, k + 1) for k in range(n - 1)], b, m, theta, v)


def cycle_graph(n, b=1.0, m=1.0, theta=0.0, v=0.0):
    if n < 3:
        raise BadParams("cycle needs n >= 3")
    pairs = [(k, k + 1) for k in range(n - 1)] + [(0, n - 1)]
    return _assemble(n, pairs, b, m, theta, v)


def star_graph(k, b=1.0, m=1.0, theta=0.0, v=0.0, m_center=None):
    """Center 0 joined to leaves 1..k."""
    if k < 1:
        raise BadParams("star needs k >= 1 leaves")
    m = _per_item(m, k + 1, "m").copy()
    if m_center is not None:
        m[0] = float(m_center)
    return _assemble(k + 1, [(0, j) for j in range(1, k + 1)], b, m, theta, v)


def grid_graph(rows, cols, b=1.0, m=1.0, theta=0.0, v=0.0):
    """Vertex id ``r * cols + c``."""
    if rows < 1 or cols < 1:
        raise BadParams("grid needs positive dimensions")
    pairs = []
    for r in range(rows):
        for c in range(cols):
            x = r * cols + c
            if c + 1 < cols:
                pairs.append((x, x + 1))
            if r + 1 < rows:
                pairs.append((x, x + cols))
    return _assemble(rows * cols, pairs, b, m, theta, v)


def birth_death_graph(n, beta=None, beta_base=None, m=1.0, theta=0.0, v=0.0):
    """Chain 0-1-...-(n-1) with b(k, k+1) = beta(k).

    ``beta`` is a callable or a sequence; alternatively ``beta_base`` gives
    the geometric law beta(k) = beta_base ** k.
    """
    if n < 1:
        raise BadParams("birth_death needs n >= 1")
    if beta is None and beta_base is None:
        raise BadParams("birth_death needs beta or beta_base")
    if beta_base is not None:
        rates = [float(beta_base) ** k for k in range(n - 1)]
    elif callable(beta):
        rates = [float(beta(k)) for k in range(n - 1)]
    else:
        rates = beta
    return _assemble(n, [(k, k + 1) for k in range(n - 1)], rates, m, theta, v)


GENERATORS: dict[str, Callable] = {
    "path": path_graph,
    "cycle": cycle_graph,
    "star": star_graph,
    "grid": grid_graph,
    "birth_death": birth_death_graph,
}


def generate(family, **params):
    """Build a fixture by family name; returns ``(graph, theta, potential)``."""
    try:
        fn = GENERATORS[family]
    except KeyError:
        raise BadParams(f"unknown generator family {family!r}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise BadParams(f"bad parameters for {family}: {exc}") from None
