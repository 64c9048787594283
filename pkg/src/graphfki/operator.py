"""Formal magnetic Schroedinger operator, its quadratic form, and exact
finite-restriction linear algebra (semigroups, spectra, resolvents).

Kernel convention: for an operator A on l2(U, m) with matrix ``A``,
``K(x, y) = A[x, y] / m(y)`` so that ``(A f)(x) = sum_y K(x, y) f(y) m(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    EigensolverFailure,
    EmptySubset,
    NegativeTime,
    NotAPath,
    SingularShift,
)
from .graph import Exhaustion, as_potential, as_theta


def as_function(g, f, dtype=complex):
    """Dense vector over the host for f given as array, scalar or sparse map."""
    if f is None:
        return np.zeros(g.n, dtype=dtype)
    if isinstance(f, dict):
        out = np.zeros(g.n, dtype=dtype)
        for k, val in f.items():
            out[g.check_vertex(int(k))] = val
        return out
    arr = np.asarray(f, dtype=dtype)
    if arr.ndim == 0:
        return np.full(g.n, arr, dtype=dtype)
    if arr.shape != (g.n,):
        raise ValueError(f"function has shape {arr.shape}, graph has {g.n} vertices")
    return arr


# ------------------------------------------------------------ pointwise

def apply_formal(g, v, theta, f, x=None):
    """Formal operator L f at ``x`` (or at every vertex when ``x`` is None).

    (L f)(x) = (1/m(x)) sum_y b(x,y) (f(x) - e^{i theta(x,y)} f(y)) + v(x) f(x)
    """
    v = as_potential(g, v)
    theta = as_theta(g, theta)
    f = as_function(g, f)
    src = g.nbr_src
    terms = g.nbr_b * (f[src] - theta.phases * f[g.nbr])
    acc = np.zeros(g.n, dtype=complex)
    np.add.at(acc, src, terms)
    out = acc / g.m + v * f
    if x is None:
        return out
    return complex(out[g.check_vertex(x)])


def quadratic_form(g, v, theta, f, h=None):
    """Sesquilinear form Q(f, h) on finitely supported functions.

    Q(f,h) = 1/2 sum_{x,y} b(x,y) (f(x) - e^{i theta} f(y)) conj(h(x) - e^{i theta} h(y))
             + sum_x v(x) f(x) conj(h(x)) m(x)
    """
    v = as_potential(g, v)
    theta = as_theta(g, theta)
    f = as_function(g, f)
    h = f if h is None else as_function(g, h)
    src, dst, ph = g.nbr_src, g.nbr, theta.phases
    df = f[src] - ph * f[dst]
    dh = h[src] - ph * h[dst]
    edge = 0.5 * np.sum(g.nbr_b * df * np.conj(dh))
    return complex(edge + np.sum(v * f * np.conj(h) * g.m))


def inner(g, f, h):
    """<f, h> in l2(X, m)."""
    return complex(np.sum(f * np.conj(h) * g.m))


def green_identity_residual(g, v, theta, f, h):
    """|Q(f, h) - <L f, h>| for finitely supported f, h."""
    f = as_function(g, f)
    h = as_function(g, h)
    lhs = quadratic_form(g, v, theta, f, h)
    rhs = inner(g, apply_formal(g, v, theta, f), h)
    return abs(lhs - rhs)


# ------------------------------------------------------- finite restriction

@dataclass(frozen=True, eq=False)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def min_eig(self):
        return float(self.eigenvalues[0])


class FiniteOperator:
    """Matrix of the Dirichlet restriction L^(U) acting on l2(U, m).

    ``H[x, x] = deg_m(x) + v(x)`` with the full host degree, and
    ``H[x, y] = -b(x, y) e^{i theta(x, y)} / m(x)`` for x, y in U.
    ``Hsym = M^{1/2} H M^{-1/2}`` is Hermitian.
    """

    def __init__(self, graph, subset, H, Hsym, m):
        self.graph = graph
        self.subset = subset
        self.index = {x: i for i, x in enumerate(subset)}
        self.H = H
        self.Hsym = Hsym
        self.m = m

    @property
    def size(self):
        return len(self.subset)

    def __repr__(self):
        return f"FiniteOperator(|U|={self.size})"

    @cached_property
    def spectral(self):
        try:
            w, V = np.linalg.eigh(self.Hsym)
        except np.linalg.LinAlgError as exc:
            raise EigensolverFailure(str(exc)) from exc
        if not np.all(np.isfinite(w)):
            raise EigensolverFailure("non-finite eigenvalues")
        return SpectralData(w, V)

    def restrict(self, f):
        """pi_U: host function -> vector on U."""
        f = np.asarray(f)
        return f[list(self.subset)]

    def extend(self, fu):
        """iota_U: vector on U -> host function, zero outside U."""
        out = np.zeros(self.graph.n, dtype=np.result_type(fu, float))
        out[list(self.subset)] = fu
        return out

    def spectral_function(self, fn):
        """Matrix fn(H) built from the eigendecomposition of Hsym."""
        sd = self.spectral
        V = sd.eigenvectors
        core = (V * fn(sd.eigenvalues)) @ V.conj().T
        s = np.sqrt(self.m)
        return core / s[:, None] * s[None, :]

    def ground_state(self, k=0):
        """k-th eigenpair (lambda, f) of H with f a host function, ||f|| = 1."""
        sd = self.spectral
        u = sd.eigenvectors[:, k]
        return float(sd.eigenvalues[k]), self.extend(u / np.sqrt(self.m))


def assemble_finite(g, v, theta, U=None):
    """Build the finite operator L^(U)_{v, theta}; ``U=None`` means the host."""
    v = as_potential(g, v)
    theta = as_theta(g, theta)
    if U is None:
        subset = tuple(range(g.n))
    else:
        subset = tuple(sorted({g.check_vertex(int(x)) for x in U}))
    if not subset:
        raise EmptySubset("U must be nonempty")
    idx = np.full(g.n, -1)
    idx[list(subset)] = np.arange(len(subset))
    k = len(subset)
    mU = g.m[list(subset)]
    H = np.zeros((k, k), dtype=complex)
    H[np.arange(k), np.arange(k)] = g.degm[list(subset)] + v[list(subset)]
    inside = (idx[g.nbr_src] >= 0) & (idx[g.nbr] >= 0)
    rows = idx[g.nbr_src[inside]]
    cols = idx[g.nbr[inside]]
    H[rows, cols] = -g.nbr_b[inside] * theta.phases[inside] / g.m[g.nbr_src[inside]]
    s = np.sqrt(mU)
    Hsym = H * s[:, None] / s[None, :]
    # symmetrize away rounding in the products
    Hsym = 0.5 * (Hsym + Hsym.conj().T)
    return FiniteOperator(g, subset, H, Hsym, mU)


class Semigroup:
    """e^{-tH} together with its integral kernel."""

    def __init__(self, op, t, matrix):
        self.op = op
        self.t = t
        self.matrix = matrix

    @cached_property
    def kernel_matrix(self):
        return self.matrix / self.op.m[None, :]

    def kernel(self, x, y):
        i, j = self.op.index[x], self.op.index[y]
        return complex(self.kernel_matrix[i, j])

    def apply(self, f):
        """e^{-tH} applied to a host function; result on U."""
        return self.matrix @ self.op.restrict(np.asarray(f, dtype=complex))

    @property
    def trace(self):
        return complex(np.trace(self.matrix))


def semigroup(op, t):
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    if t == 0:
        return Semigroup(op, 0.0, np.eye(op.size, dtype=complex))
    return Semigroup(op, float(t), op.spectral_function(lambda w: np.exp(-t * w)))


def spectrum(op):
    return op.spectral


def resolvent(op, lam):
    """(H + lam)^{-1} via the spectral decomposition."""
    w = op.spectral.eigenvalues
    shift = w + lam
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.min(np.abs(shift)) <= 1e-12 * scale:
        raise SingularShift(f"-{lam} is an eigenvalue")
    return op.spectral_function(lambda ev: 1.0 / (ev + lam))


def expm_reference(op, t):
    """Scaling-and-squaring matrix exponential, independent of eigh."""
    return scipy.linalg.expm(-t * op.H)


# ---------------------------------------------------- potential diagnostics

@dataclass
class ClassDiagnostic:
    lower_bounds: list
    epsilon: float | None = None
    constants: list | None = None

    def nonincreasing(self, tol=1e-10):
        lb = self.lower_bounds
        return all(b <= a + tol for a, b in zip(lb, lb[1:]))


def class_diagnostic(g, v, theta, exh: Exhaustion, epsilon=None):
    """Bottom of the spectrum of L^(X_n) along an exhaustion.

    With ``epsilon`` also returns C_n = -lambda_min of
    (1 - epsilon) L^(X_n)_{v+, theta} - v_-.
    """
    v = as_potential(g, v)
    if len(exh) == 0:
        raise EmptySubset("exhaustion has no sets")
    lows, consts = [], []
    for U in exh:
        lows.append(assemble_finite(g, v, theta, U).spectral.min_eig)
        if epsilon is not None:
            op = assemble_finite(g, np.maximum(v, 0), theta, U)
            vm = np.maximum(-v, 0)[list(op.subset)]
            M = (1 - epsilon) * op.Hsym - np.diag(vm)
            consts.append(-float(np.linalg.eigvalsh(M)[0]))
    return ClassDiagnostic(lows, epsilon, consts if epsilon is not None else None)


# ------------------------------------------------------ ground state transform

class GroundStateTransform:
    """Edge weights b^(f) and the associated non-magnetic form Q^(f)."""

    def __init__(self, g, theta, f):
        theta = as_theta(g, theta)
        f = as_function(g, f)
        self.graph = g
        u, w = g.edges[:, 0], g.edges[:, 1]
        f1, f2 = f.real, f.imag
        th = theta.values
        self.weights = g.b * (
            np.cos(th) * (f1[u] * f1[w] + f2[u] * f2[w])
            + np.sin(th) * (f1[w] * f2[u] - f1[u] * f2[w]))

    def weight(self, x, y):
        k = self.graph.edge_index(x, y)
        return 0.0 if k < 0 else float(self.weights[k])

    def form(self, gfun, hfun=None):
        g = self.graph
        a = as_function(g, gfun)
        c = a if hfun is None else as_function(g, hfun)
        u, w = g.edges[:, 0], g.edges[:, 1]
        # each undirected edge appears twice in the full double sum
        return complex(np.sum(self.weights * (a[u] - a[w]) * np.conj(c[u] - c[w])))


def ground_state_transform(g, theta, f):
    return GroundStateTransform(g, theta, f)


# ------------------------------------------------------------- path series

def ess_sa_path_sum(g, v, alpha, path, n_terms):
    """Partial sums S_N = sum_{n=1}^N m(x_n) prod_{j<n} (1 + (v(x_j)-alpha)/deg_m(x_j))^2."""
    v = as_potential(g, v)
    path = [g.check_vertex(int(x)) for x in path]
    if len(set(path)) != len(path):
        raise NotAPath("path vertices must be pairwise distinct")
    for a, b in zip(path, path[1:]):
        if g.weight(a, b) <= 0:
            raise NotAPath(f"{a} and {b} are not adjacent")
    if len(path) < n_terms + 1:
        raise NotAPath(f"path has {len(path)} vertices, need {n_terms + 1}")
    sums = []
    prod = 1.0
    total = 0.0
    for n in range(1, n_terms + 1):
        xj = path[n - 1]
        prod *= (1.0 + (v[xj] - alpha) / g.degm[xj]) ** 2
        total += g.m[path[n]] * prod
        sums.append(total)
    return sums
