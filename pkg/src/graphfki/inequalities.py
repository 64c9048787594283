"""Numerical certificates for the semigroup identities and inequalities.

Every check compares exact finite-matrix quantities (eigendecomposition of
the Hermitianized operator) and, where the statement is probabilistic,
Monte Carlo frequencies.  Results are returned as :class:`CheckReport`;
violations are measured relative to the natural scale of the compared
quantities, so ``tolerance`` is a relative tolerance throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import BadExhaustion, NegativePotential, PotentialOrderViolated
from .graph import as_potential, as_theta, verify_intrinsic, wrap_phase
from .operator import (
    apply_formal,
    as_function,
    assemble_finite,
    green_identity_residual,
    ground_state_transform,
    inner,
    quadratic_form,
    resolvent,
    semigroup,
)
from .process import simulate

RTOL = 1e-10

KATO_NOT_CHECKED = (
    "form-domain domination and compact-resolvent transfer concern "
    "infinite-dimensional domains and are not checked on finite matrices")


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_violation: float
    tolerance: float
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_violation": float(self.max_violation),
            "tolerance": float(self.tolerance),
            "witnesses": [[str(loc), _num(l), _num(r)] for loc, l, r in self.witnesses],
            "details": _plain(self.details),
            "notes": list(self.notes),
        }


def _num(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _num(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


class _Collector:
    """Accumulates ``lhs <= rhs`` conditions.

    Each condition's excess ``lhs - rhs`` is divided by ``scale`` and, if a
    condition-specific ``tol`` is given, rescaled into units of the
    report tolerance.  A condition fails when its normalized excess exceeds
    the report tolerance.
    """

    def __init__(self, name, tolerance):
        self.name = name
        self.tolerance = tolerance
        self.worst = 0.0
        self.witnesses = []
        self.details = {}
        self.notes = []

    def add(self, location, lhs, rhs, scale=1.0, tol=None):
        excess = (float(np.real(lhs)) - float(np.real(rhs))) / scale
        if tol is not None:
            excess *= self.tolerance / tol
        if excess > self.worst:
            self.worst = excess
        if excess > self.tolerance:
            self.witnesses.append((location, lhs, rhs))

    def add_matrix(self, label, subset, lhs, rhs, scale):
        """Entrywise ``lhs <= rhs`` for real matrices indexed by ``subset``."""
        excess = (lhs - rhs) / scale
        worst = float(np.max(excess)) if excess.size else 0.0
        self.worst = max(self.worst, worst)
        for i, j in zip(*np.nonzero(excess > self.tolerance)):
            self.witnesses.append(
                (f"{label}({subset[i]},{subset[j]})", float(lhs[i, j]), float(rhs[i, j])))

    def report(self):
        return CheckReport(self.name, self.worst <= self.tolerance and not self.witnesses,
                           self.worst, self.tolerance, self.witnesses, self.details,
                           self.notes)


def _check_order(g, v1, v2, U=None):
    verts = range(g.n) if U is None else U
    for x in verts:
        if v1[x] < v2[x]:
            raise PotentialOrderViolated(x, float(v1[x]), float(v2[x]))


def kernel_domination(lhs, rhs, subset, tolerance=RTOL, name="kernel_domination"):
    """Entrywise |lhs| <= rhs relative to max(1, max rhs)."""
    col = _Collector(name, tolerance)
    rhs = np.real(rhs)
    col.add_matrix("K", list(subset), np.abs(lhs), rhs, max(1.0, float(np.max(rhs))))
    return col.report()


# ------------------------------------------------------------------ Kato

def check_kato(g, v1, v2, theta, U=None, t_list=(0.5, 1.0), lam_list=(1.0,),
               tolerance=RTOL):
    """Domination of the magnetic semigroup/resolvent by the non-magnetic one.

    For v1 >= v2 checks, on L^(U): entrywise |K_{v1,theta}| <= K_{v2,0},
    trace ordering, ordering of the spectral bottoms, and entrywise
    |(L_{v1,theta} + lam)^{-1}| <= (L_{v2,0} + Re lam)^{-1}.
    """
    v1 = as_potential(g, v1)
    v2 = as_potential(g, v2)
    _check_order(g, v1, v2)
    op1 = assemble_finite(g, v1, theta, U)
    op2 = assemble_finite(g, v2, None, U)
    sub = list(op1.subset)
    col = _Collector("kato", tolerance)
    col.notes.append(KATO_NOT_CHECKED)

    for t in t_list:
        s1, s2 = semigroup(op1, t), semigroup(op2, t)
        k1, k2 = s1.kernel_matrix, s2.kernel_matrix.real
        col.add_matrix(f"t={t}:K", sub, np.abs(k1), k2, max(1.0, float(np.max(k2))))
        tr1, tr2 = s1.trace.real, s2.trace.real
        col.add(f"t={t}:trace", tr1, tr2, max(1.0, abs(tr2)))
        col.details[f"trace t={t}"] = [tr1, tr2]

    e1, e2 = op1.spectral.min_eig, op2.spectral.min_eig
    col.add("min_spectrum", e2, e1, max(1.0, abs(e1), abs(e2)))
    col.details["min_spectrum"] = [e1, e2]

    for lam in lam_list:
        lam = complex(lam)
        if not lam.real > -e2:
            col.notes.append(f"lambda={lam} skipped: needs Re(lambda) > {-e2}")
            continue
        r1 = resolvent(op1, lam) / op1.m[None, :]
        r2 = (resolvent(op2, lam.real) / op2.m[None, :]).real
        col.add_matrix(f"lambda={_num(lam)}:R", sub, np.abs(r1), r2,
                       max(1.0, float(np.max(r2))))
    return col.report()


# ------------------------------------------------------- Golden-Thompson

def golden_thompson_matrix(A, B, t):
    """(tr e^{-t(A+B)}, tr e^{-tA/2} e^{-tB} e^{-tA/2}) for Hermitian A, B."""
    lhs = np.trace(scipy.linalg.expm(-t * (A + B))).real
    half = scipy.linalg.expm(-0.5 * t * A)
    rhs = np.trace(half @ scipy.linalg.expm(-t * B) @ half).real
    return float(lhs), float(rhs)


def check_golden_thompson(g, v1, v2, theta, U=None, t_list=(0.5, 1.0),
                          tolerance=RTOL):
    """Trace chain for v1 >= v2 on L^(U):

    tr e^{-tL_{v1,theta}} <= tr e^{-tL_{v2,0}}
        <= sum_x e^{-tL}(x,x) e^{-t v2(x)} m(x) <= C(t) sum_x e^{-t v2(x)},

    with C(t) = max_x e^{-tL}(x,x) m(x) <= 1, plus the matrix inequality
    tr e^{-t(A+B)} <= tr e^{-tA/2} e^{-tB} e^{-tA/2} for A = L^(U)_{0,0},
    B = v2, and the identity of its right side with the middle sum.
    """
    v1 = as_potential(g, v1)
    v2 = as_potential(g, v2)
    _check_order(g, v1, v2)
    op1 = assemble_finite(g, v1, theta, U)
    op2 = assemble_finite(g, v2, None, U)
    op0 = assemble_finite(g, None, None, U)
    sub = list(op0.subset)
    w2 = v2[sub]
    mU = op0.m
    col = _Collector("golden_thompson", tolerance)
    for t in t_list:
        tr1 = semigroup(op1, t).trace.real
        tr2 = semigroup(op2, t).trace.real
        k0 = semigroup(op0, t).kernel_matrix.real
        diag = np.diag(k0) * mU
        mid = math.fsum(diag * np.exp(-t * w2))
        c_t = float(np.max(diag))
        right = c_t * math.fsum(np.exp(-t * w2))
        gt_lhs, gt_rhs = golden_thompson_matrix(op0.Hsym, np.diag(w2).astype(complex), t)
        scale = max(1.0, abs(right), abs(mid))
        col.add(f"t={t}:magnetic<=nonmagnetic", tr1, tr2, scale)
        col.add(f"t={t}:trace<=middle", tr2, mid, scale)
        col.add(f"t={t}:middle<=C(t)sum", mid, right, scale)
        col.add(f"t={t}:C(t)<=1", c_t, 1.0)
        col.add(f"t={t}:matrix_gt", gt_lhs, gt_rhs, scale)
        col.add(f"t={t}:gt_rhs==middle", abs(gt_rhs - mid), 0.0, scale)
        col.details[f"t={t}"] = {"trace_v1_theta": tr1, "trace_v2": tr2, "middle": mid,
                                 "C": c_t, "bound": right,
                                 "matrix_gt": [gt_lhs, gt_rhs]}
    return col.report()


# -------------------------------------------------------------- exhaustion

def check_exhaustion(g, v, theta, f, x, t, exh, reference=None, final_tol=1e-3,
                     tolerance=RTOL):
    """Semigroups of the Dirichlet restrictions along an exhaustion.

    The error ||iota e^{-tL^(X_n)} pi h - e^{-tL^(ref)} h|| must be
    nonincreasing (to ``tolerance``) and at most ``final_tol * ||h||`` at the
    last set, for h = f and for every unit vector on X_1.  For theta = 0 the
    traces of e^{-tL^(X_n)} must be nondecreasing, as must the diagonal
    kernel entry at x.
    """
    theta = as_theta(g, theta)
    v = as_potential(g, v)
    if len(exh) == 0:
        raise BadExhaustion("empty exhaustion")
    first = set(exh[0])
    x = g.check_vertex(x)
    if x not in first:
        raise BadExhaustion(f"x={x} is not in the first set")
    f = as_function(g, f)
    outside = [z for z in range(g.n) if z not in first and f[z] != 0]
    if outside:
        raise BadExhaustion(f"f is not supported in the first set (vertex {outside[0]})")
    ref = tuple(exh[-1]) if reference is None else tuple(sorted(reference))
    if not set(exh[-1]) <= set(ref):
        raise BadExhaustion("reference set must contain every exhaustion set")

    op_ref = assemble_finite(g, v, theta, ref)
    s_ref = semigroup(op_ref, t)
    tests = {"f": f}
    for z in sorted(first):
        e = np.zeros(g.n, dtype=complex)
        e[z] = 1.0
        tests[f"delta_{z}"] = e

    col = _Collector("exhaustion", tolerance)
    ref_vals = {k: op_ref.extend(s_ref.apply(h)) for k, h in tests.items()}
    norms = {k: math.sqrt(inner(g, h, h).real) for k, h in tests.items()}
    errors = {k: [] for k in tests}
    traces, diag = [], []
    for U in exh:
        op = assemble_finite(g, v, theta, U)
        s = semigroup(op, t)
        for k, h in tests.items():
            d = op.extend(s.apply(h)) - ref_vals[k]
            errors[k].append(math.sqrt(inner(g, d, d).real))
        traces.append(s.trace.real)
        diag.append(s.kernel(x, x).real)

    for k, errs in errors.items():
        scale = max(norms[k], 1e-300)
        for n in range(1, len(errs)):
            col.add(f"{k}:error[{n}]<=error[{n - 1}]", errs[n], errs[n - 1], scale)
        col.add(f"{k}:final_error", errs[-1], final_tol * norms[k], scale, tol=final_tol)
    col.details["errors"] = errors["f"]
    col.details["traces"] = traces
    if theta.is_zero():
        tscale = max(1.0, max(abs(a) for a in traces))
        for n in range(1, len(traces)):
            col.add(f"trace[{n - 1}]<=trace[{n}]", traces[n - 1], traces[n], tscale)
            col.add(f"K(x,x)[{n - 1}]<=K(x,x)[{n}]", diag[n - 1], diag[n],
                    max(1.0, abs(diag[-1])))
    return col.report()


# --------------------------------------------------------------- generator

def difference_quotients(g, v, theta, U, f, x, t_sequence):
    op = assemble_finite(g, v, theta, U)
    fu = op.extend(op.restrict(as_function(g, f)))
    i = op.index[x]
    return [((semigroup(op, t).apply(fu)[i] - fu[x]) / t) for t in t_sequence], fu


def check_generator(g, v, theta, U, f, x, t_sequence=(1e-1, 1e-2, 1e-3, 1e-4),
                    rtol=1e-6, order_range=(0.9, 1.1), mc_times=None,
                    mc_samples=100_000, seed=0, tolerance=RTOL):
    """Small-time behaviour of the semigroup on L^(U).

    The quotient (e^{-tL} f(x) - f(x))/t tends to -L f(x) at first order
    in t; the Richardson value 2 D(t/2) - D(t) at the smallest t must match
    to relative ``rtol``.  With ``mc_times`` also estimates
    P_x(N(t) >= 2)/t and requires it to decrease along the given times.
    """
    x = g.check_vertex(x)
    t_sequence = [float(t) for t in t_sequence]
    col = _Collector("generator", tolerance)
    quot, fu = difference_quotients(g, v, theta, U, f, x, t_sequence)
    target = -apply_formal(g, v, theta, fu, x)
    scale = abs(target) if target != 0 else 1.0
    errs = [abs(q - target) for q in quot]
    col.details["target"] = target
    col.details["quotients"] = quot
    col.details["errors"] = errs

    orders = []
    for k in range(len(errs) - 1):
        if errs[k + 1] > 0 and errs[k] > 0:
            orders.append(math.log(errs[k] / errs[k + 1])
                          / math.log(t_sequence[k] / t_sequence[k + 1]))
    col.details["orders"] = orders
    lo, hi = order_range
    width = hi - lo
    for k, p in enumerate(orders):
        col.add(f"order[{k}]>={lo}", lo - p, 0.0, tol=width)
        col.add(f"order[{k}]<={hi}", p - hi, 0.0, tol=width)

    t_min = t_sequence[-1]
    (half,), _ = difference_quotients(g, v, theta, U, f, x, [t_min / 2])
    rich = 2 * half - quot[-1]
    col.details["richardson"] = rich
    col.add("richardson", abs(rich - target), 0.0, scale, tol=rtol)

    if mc_times:
        freq = []
        for t in mc_times:
            b = simulate(g, x, t, seed, n_samples=mc_samples, max_jumps=2)
            freq.append(np.count_nonzero(b.n_jumps >= 2) / mc_samples / t)
        col.details["P(N>=2)/t"] = freq
        for k in range(1, len(freq)):
            col.add(f"P(N>=2)/t[{k}]<=[{k - 1}]", freq[k], freq[k - 1])
    return col.report()


# ------------------------------------------------------------ ground state

def check_ground_state(g, v, theta, U=None, which="all", trials=20, seed=0,
                       tolerance=1e-9):
    """Q(fg, fg) = Q^(f)(g, g) + lambda ||fg||^2 for eigenpairs (lambda, f).

    The identity is an algebraic consequence of the eigenvalue equation for
    real-valued g, which is what is sampled here.
    """
    op = assemble_finite(g, v, theta, U)
    pairs = range(op.size) if which == "all" else [int(which)]
    rs = np.random.default_rng(seed)
    col = _Collector("ground_state", tolerance)
    sub = list(op.subset)
    for k in pairs:
        lam, f = op.ground_state(k)
        gst = ground_state_transform(g, theta, f)
        for j in range(trials):
            gfun = np.zeros(g.n)
            gfun[sub] = rs.normal(size=len(sub))
            fg = f * gfun
            q = quadratic_form(g, v, theta, fg)
            qf = gst.form(gfun)
            nrm = inner(g, fg, fg).real
            res = abs(q - qf - lam * nrm)
            scale = max(1.0, abs(q), abs(qf), abs(lam) * nrm)
            col.add(f"pair={k},trial={j}", res, 0.0, scale)
    return col.report()


# --------------------------------------------------------------- form sum

def check_form_sum(g, v, theta, f, x, t, cutoffs, tolerance=RTOL):
    """Semigroups of the truncated potentials min(v, n) for n in ``cutoffs``.

    The last value must match the untruncated one, and the gaps to it must
    be nonincreasing.  For theta = 0 and f >= 0 the values themselves must be
    nonincreasing in n.
    """
    v = as_potential(g, v)
    if np.any(v < 0):
        raise NegativePotential(f"v({int(np.argmin(v))}) < 0")
    cutoffs = list(cutoffs)
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be increasing")
    theta = as_theta(g, theta)
    f = as_function(g, f)
    x = g.check_vertex(x)
    exact = semigroup(assemble_finite(g, v, theta), t).apply(f)[x]
    vals = [semigroup(assemble_finite(g, np.minimum(v, c), theta), t).apply(f)[x]
            for c in cutoffs]
    gaps = [abs(u - exact) for u in vals]
    scale = max(1.0, abs(exact), max(abs(u) for u in vals))
    col = _Collector("form_sum", tolerance)
    col.details["values"] = vals
    col.details["exact"] = exact
    col.details["gaps"] = gaps
    for n in range(1, len(gaps)):
        col.add(f"gap[{n}]<=gap[{n - 1}]", gaps[n], gaps[n - 1], scale)
    col.add("final_gap", gaps[-1], 0.0, scale)
    if theta.is_zero() and np.all(f.imag == 0) and np.all(f.real >= 0):
        for n in range(1, len(vals)):
            col.add(f"value[{n}]<=value[{n - 1}]", vals[n].real, vals[n - 1].real, scale)
    return col.report()


# --------------------------------------------------------- metric and misc

def check_intrinsic(g, d, tolerance=1e-12):
    slack = verify_intrinsic(g, d)
    col = _Collector("intrinsic", tolerance)
    for x, s in enumerate(slack):
        col.add(f"vertex {x}", -s, 0.0, max(1.0, float(g.m[x])))
    col.details["slack"] = slack
    return col.report()


def check_identities(g, v, theta, U=None, seed=0, tolerance=RTOL):
    """Exact algebraic identities of the finite operator.

    Green's formula, Hermiticity, form/matrix consistency, semigroup
    property, kernel symmetry, gauge covariance, theta antisymmetry and,
    for v >= 0 and theta = 0, positivity of the semigroup.
    """
    v = as_potential(g, v)
    theta = as_theta(g, theta)
    rs = np.random.default_rng(seed)
    col = _Collector("identities", tolerance)
    op = assemble_finite(g, v, theta, U)
    sub = list(op.subset)

    # Green's formula on the host
    for j in range(5):
        f = rs.normal(size=g.n) + 1j * rs.normal(size=g.n)
        h = rs.normal(size=g.n) + 1j * rs.normal(size=g.n)
        res = green_identity_residual(g, v, theta, f, h)
        scale = max(1.0, abs(quadratic_form(g, v, theta, f, h)))
        col.add(f"green[{j}]", res, 0.0, scale, tol=1e-12)

    herm = float(np.max(np.abs(op.Hsym - op.Hsym.conj().T)))
    col.add("hermitian", herm, 0.0, tol=1e-13)

    fu = np.zeros(g.n, dtype=complex)
    fu[sub] = rs.normal(size=len(sub)) + 1j * rs.normal(size=len(sub))
    q = quadratic_form(g, v, theta, fu)
    hq = np.sum((op.H @ fu[sub]) * np.conj(fu[sub]) * op.m)
    col.add("form==matrix", abs(q - hq), 0.0, max(1.0, abs(q)), tol=1e-12)

    hscale = max(1.0, float(np.max(np.abs(op.Hsym))))
    sd = op.spectral
    resid = np.linalg.norm(op.Hsym @ sd.eigenvectors - sd.eigenvectors * sd.eigenvalues, axis=0)
    col.add("eigen_residual", float(np.max(resid)), 0.0, hscale)
    ev_H = np.sort(np.linalg.eigvals(op.H).real)
    col.add("similar_spectra", float(np.max(np.abs(ev_H - sd.eigenvalues))), 0.0, hscale)

    sg = {s: semigroup(op, s).matrix for s in (0.1, 0.5, 1.0)}
    for s in (0.1, 0.5, 1.0):
        for u in (0.1, 0.5, 1.0):
            comb = semigroup(op, s + u).matrix
            err = float(np.max(np.abs(comb - sg[s] @ sg[u])))
            col.add(f"semigroup({s}+{u})", err, 0.0, max(1.0, float(np.max(np.abs(comb)))))
    K = semigroup(op, 1.0).kernel_matrix
    col.add("kernel_hermitian", float(np.max(np.abs(K - K.conj().T))), 0.0,
            max(1.0, float(np.max(np.abs(K)))), tol=1e-12)

    phi = rs.uniform(-np.pi, np.pi, size=g.n)
    op_g = assemble_finite(g, v, theta.gauge(phi), U)
    d = float(np.max(np.abs(op_g.spectral.eigenvalues - sd.eigenvalues)))
    col.add("gauge_covariance", d, 0.0, hscale)
    # conjugation by diag(e^{i phi}) maps one matrix onto the other
    P = np.exp(1j * phi[sub])
    conj = P[:, None] * op.H * np.conj(P)[None, :]
    col.add("gauge_conjugation", float(np.max(np.abs(conj - op_g.H))), 0.0, hscale)

    for k, (a, b) in enumerate(g.edges):
        s = theta(int(a), int(b)) + theta(int(b), int(a))
        if s != 0:
            col.add(f"antisymmetry({a},{b})", abs(s), 0.0, tol=1e-300)

    if theta.is_zero() and np.all(v >= 0):
        for s, M in sg.items():
            col.add(f"positivity t={s}", -float(np.min(M.real)), 0.0, tol=1e-14)
    return col.report()


__all__ = [
    "CheckReport", "check_kato", "check_golden_thompson", "check_exhaustion",
    "check_generator", "check_ground_state", "check_form_sum", "check_intrinsic",
    "check_identities", "golden_thompson_matrix", "kernel_domination", "wrap_phase",
]
