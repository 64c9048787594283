"""Command-line front end.

Every invocation runs one experiment and emits one self-describing report
(config, config hash, seed, version, tolerances).  Exit codes: 0 success,
1 a verification check failed, 2 invalid configuration or input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from io import StringIO
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigInvalid, GraphFKIError, ParseError, PotentialOrderViolated
from .estimator import fki_dirichlet, fki_kernel, fki_semigroup, fki_trace
from .graph import (
    default_intrinsic_metric,
    generate,
    make_exhaustion,
    verify_intrinsic,
)
from .inequalities import (
    RTOL,
    check_exhaustion,
    check_form_sum,
    check_generator,
    check_golden_thompson,
    check_ground_state,
    check_intrinsic,
    check_kato,
)
from .io import dumps, kernel_csv, load_graph, spectrum_csv, write_atomic
from .operator import assemble_finite, ess_sa_path_sum, semigroup
from .process import dump_trajectories_csv, sample_trajectories

TASKS = ("expm", "spectrum", "simulate", "fki", "verify", "metric", "esssa-pathsum")
FKI_KINDS = ("semigroup", "kernel", "trace", "dirichlet")
VERIFY_KINDS = ("kato", "gt", "exhaustion", "generator", "groundstate", "formsum",
                "intrinsic")
EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2


@dataclass
class ExperimentConfig:
    task: str
    graph: str | None = None
    generator: str | None = None
    kind: str | None = None
    t: float = 1.0
    x: int = 0
    y: int | None = None
    f: str | None = None
    U: str | None = None
    v1: str | None = None
    v2: str | None = None
    n_samples: int = 10_000
    max_jumps: int = 10_000
    seed: int = 0
    cutoffs: list = field(default_factory=list)
    radii: list = field(default_factory=list)
    t_list: list = field(default_factory=list)
    alpha: float = 0.0
    path: list = field(default_factory=list)
    n_terms: int = 10
    output: str | None = None
    format: str = "json"

    def validate(self):
        if self.task not in TASKS:
            raise ConfigInvalid(f"unknown task {self.task!r}")
        if (self.graph is None) == (self.generator is None):
            raise ConfigInvalid("exactly one of graph / generator is required")
        if self.task == "fki" and self.kind not in FKI_KINDS:
            raise ConfigInvalid(f"fki kind must be one of {FKI_KINDS}")
        if self.task == "verify" and self.kind not in VERIFY_KINDS:
            raise ConfigInvalid(f"verify kind must be one of {VERIFY_KINDS}")
        if self.format not in ("json", "csv"):
            raise ConfigInvalid("format must be json or csv")
        if self.t < 0:
            raise ConfigInvalid("t must be >= 0")
        if self.n_samples < 1 or self.max_jumps < 1:
            raise ConfigInvalid("n_samples and max_jumps must be >= 1")

    def describe(self):
        """Config fields that determine the result (the output path does not)."""
        d = asdict(self)
        d.pop("output")
        return d

    def digest(self):
        text = json.dumps(self.describe(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


# ----------------------------------------------------------- input parsing

def _split_top(text, sep=","):
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch in "[{(":
            depth += 1
        elif ch in "]})":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        parts.append(cur)
    return parts


def _value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_generator(spec):
    """``family:key=value,key=value`` with JSON values, e.g. ``path:n=5,theta=0.5``."""
    family, _, rest = spec.partition(":")
    params = {}
    for item in _split_top(rest):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigInvalid(f"bad generator parameter {item!r}")
        params[key.strip()] = _value(val.strip())
    return generate(family.strip(), **params)


def load_source(cfg):
    if cfg.graph is not None:
        return load_graph(cfg.graph)
    return parse_generator(cfg.generator)


def _vertex(g, x, what):
    if x is None or not 0 <= int(x) < g.n:
        raise ConfigInvalid(f"{what} = {x!r} is not a vertex of the graph")
    return int(x)


def parse_subset(g, spec):
    """``None``/``all``, ``ball:x0:r`` or a comma list of vertex ids."""
    if spec is None or spec == "all":
        return None
    if spec.startswith("ball:"):
        _, x0, r = spec.split(":")
        return list(make_exhaustion(g, _vertex(g, int(x0), "ball center"), [float(r)])[0])
    return [_vertex(g, int(z), "U entry") for z in spec.split(",") if z.strip()]


def parse_potential(g, spec, default):
    if spec is None:
        return np.asarray(default, dtype=float)
    vals = [float(z) for z in spec.split(",")]
    if len(vals) == 1:
        return np.full(g.n, vals[0])
    if len(vals) != g.n:
        raise ConfigInvalid(f"potential needs {g.n} values, got {len(vals)}")
    return np.array(vals)


def parse_function(g, spec, v=None, theta=None, U=None):
    """``indicator:y``, ``constant:c``, ``ground-state`` or ``x:val,x:val``."""
    if spec is None:
        return np.ones(g.n, dtype=complex)
    if spec.startswith("indicator:"):
        f = np.zeros(g.n, dtype=complex)
        f[_vertex(g, int(spec.split(":")[1]), "indicator vertex")] = 1.0
        return f
    if spec.startswith("constant:"):
        return np.full(g.n, complex(spec.split(":")[1]))
    if spec == "ground-state":
        _, f = assemble_finite(g, v, theta, U).ground_state(0)
        return f
    f = np.zeros(g.n, dtype=complex)
    for item in spec.split(","):
        k, _, val = item.partition(":")
        f[_vertex(g, int(k), "f entry")] = complex(val)
    return f


# ------------------------------------------------------------------ tasks

def _task_expm(cfg, g, theta, v):
    op = assemble_finite(g, v, theta, parse_subset(g, cfg.U))
    s = semigroup(op, cfg.t)
    if cfg.format == "csv":
        return kernel_csv(op, s.kernel_matrix), True
    K = s.kernel_matrix
    return {"subset": list(op.subset),
            "kernel_re": K.real.tolist(), "kernel_im": K.imag.tolist(),
            "trace": [s.trace.real, s.trace.imag]}, True


def _task_spectrum(cfg, g, theta, v):
    op = assemble_finite(g, v, theta, parse_subset(g, cfg.U))
    ev = op.spectral.eigenvalues
    if cfg.format == "csv":
        return spectrum_csv(ev), True
    return {"subset": list(op.subset), "eigenvalues": ev.tolist()}, True


def _task_simulate(cfg, g, theta, v):
    x = _vertex(g, cfg.x, "x")
    trajs = sample_trajectories(g, x, cfg.t, cfg.seed, cfg.n_samples, cfg.max_jumps)
    if cfg.format == "csv":
        buf = StringIO()
        dump_trajectories_csv(trajs, buf)
        return buf.getvalue(), True
    return {"trajectories": [
        {"sample_index": tr.sample_index, "states": list(tr.states),
         "jump_times": list(tr.jump_times), "censored": tr.censored}
        for tr in trajs]}, True


def _task_fki(cfg, g, theta, v):
    U = parse_subset(g, cfg.U)
    x = _vertex(g, cfg.x, "x")
    common = dict(seed=cfg.seed, max_jumps=cfg.max_jumps)
    if cfg.kind == "semigroup":
        f = parse_function(g, cfg.f, v, theta, U)
        est = fki_semigroup(g, v, theta, f, x, cfg.t, cfg.n_samples, **common)
        oracle = semigroup(assemble_finite(g, v, theta), cfg.t).apply(f)[x]
    elif cfg.kind == "dirichlet":
        if U is None:
            U = list(range(g.n))
        if x not in U:
            raise ConfigInvalid(f"x = {x} is not in U")
        f = parse_function(g, cfg.f, v, theta, U)
        est = fki_dirichlet(g, v, theta, f, x, cfg.t, U, cfg.n_samples, **common)
        op = assemble_finite(g, v, theta, U)
        oracle = semigroup(op, cfg.t).apply(f)[op.index[x]]
    elif cfg.kind == "kernel":
        y = _vertex(g, cfg.y, "y")
        est = fki_kernel(g, v, theta, x, y, cfg.t, cfg.n_samples, **common)
        oracle = semigroup(assemble_finite(g, v, theta), cfg.t).kernel(x, y)
    else:
        est = fki_trace(g, v, theta, U, cfg.t, cfg.n_samples, **common)
        oracle = semigroup(assemble_finite(g, v, theta, U), cfg.t).trace
    return {"estimate": est.to_json(oracle=oracle)}, True


def _task_verify(cfg, g, theta, v):
    U = parse_subset(g, cfg.U)
    x = _vertex(g, cfg.x, "x")
    t_list = cfg.t_list or [cfg.t]
    kind = cfg.kind
    try:
        if kind in ("kato", "gt"):
            v1 = parse_potential(g, cfg.v1, v)
            v2 = parse_potential(g, cfg.v2, v1)
            fn = check_kato if kind == "kato" else check_golden_thompson
            report = fn(g, v1, v2, theta, U, t_list)
        elif kind == "exhaustion":
            if not cfg.radii:
                raise ConfigInvalid("exhaustion needs --radii")
            exh = make_exhaustion(g, x, cfg.radii)
            f = parse_function(g, cfg.f or f"indicator:{x}", v, theta)
            report = check_exhaustion(g, v, theta, f, x, cfg.t, exh)
        elif kind == "generator":
            f = parse_function(g, cfg.f, v, theta, U)
            report = check_generator(g, v, theta, U, f, x, t_list if cfg.t_list
                                     else (1e-1, 1e-2, 1e-3, 1e-4))
        elif kind == "groundstate":
            report = check_ground_state(g, v, theta, U, seed=cfg.seed)
        elif kind == "formsum":
            if not cfg.cutoffs:
                raise ConfigInvalid("formsum needs --cutoffs")
            f = parse_function(g, cfg.f, v, theta)
            report = check_form_sum(g, v, theta, f, x, cfg.t, cfg.cutoffs)
        else:
            report = check_intrinsic(g, default_intrinsic_metric(g))
    except PotentialOrderViolated as exc:
        raise ConfigInvalid(str(exc)) from exc
    return {"report": report.to_json()}, report.passed


def _task_metric(cfg, g, theta, v):
    d = default_intrinsic_metric(g)
    if cfg.format == "csv":
        lines = ["x,y,d"] + [f"{a},{b},{float(d.dist[a, b])!r}"
                             for a in range(g.n) for b in range(g.n)]
        return "\n".join(lines) + "\n", True
    return {"sigma": d.sigma.tolist(), "dist": d.dist.tolist(),
            "slack": verify_intrinsic(g, d).tolist()}, True


def _task_pathsum(cfg, g, theta, v):
    path = cfg.path or list(range(g.n))
    return {"partial_sums": ess_sa_path_sum(g, v, cfg.alpha, path, cfg.n_terms)}, True


HANDLERS = {
    "expm": _task_expm, "spectrum": _task_spectrum, "simulate": _task_simulate,
    "fki": _task_fki, "verify": _task_verify, "metric": _task_metric,
    "esssa-pathsum": _task_pathsum,
}


def run(cfg: ExperimentConfig):
    """Run one experiment; returns ``(exit_code, output_text)``.

    The output is also written atomically to ``cfg.output`` when set.
    """
    cfg.validate()
    g, theta, v = load_source(cfg)
    v = np.asarray(v, dtype=float)
    payload, ok = HANDLERS[cfg.task](cfg, g, theta, v)
    if isinstance(payload, str):
        text = payload
    else:
        report = {
            "config": cfg.describe(),
            "config_hash": cfg.digest(),
            "seed": cfg.seed,
            "version": __version__,
            "tolerances": {"matrix_rtol": RTOL, "mc_stderr_multiple": 4.0},
        }
        report.update(payload)
        text = dumps(report)
    if cfg.output:
        write_atomic(cfg.output, text)
    return (EXIT_OK if ok else EXIT_FAILED), text


# -------------------------------------------------------------- argparse

def _floats(text):
    return [float(z) for z in text.split(",") if z.strip()]


def _ints(text):
    return [int(z) for z in text.split(",") if z.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="graphfki", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="task", required=True)

    def common(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--graph", help="JSON graph file")
        src.add_argument("--generator", help="family:key=value,... e.g. path:n=5")
        sp.add_argument("--t", type=float, default=1.0)
        sp.add_argument("--x", type=int, default=0)
        sp.add_argument("--y", type=int)
        sp.add_argument("--f", help="indicator:y | constant:c | ground-state | x:val,...")
        sp.add_argument("--U", help="all | ball:x0:r | comma list")
        sp.add_argument("--n-samples", type=int, default=10_000)
        sp.add_argument("--max-jumps", type=int, default=10_000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", "-o")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    for name in ("expm", "spectrum", "simulate", "metric"):
        common(sub.add_parser(name))
    ps = sub.add_parser("esssa-pathsum")
    common(ps)
    ps.add_argument("--alpha", type=float, default=0.0)
    ps.add_argument("--path", type=_ints, default=[])
    ps.add_argument("--n-terms", type=int, default=10)

    pf = sub.add_parser("fki")
    pf.add_argument("kind", choices=FKI_KINDS)
    common(pf)

    pv = sub.add_parser("verify")
    pv.add_argument("kind", choices=VERIFY_KINDS)
    common(pv)
    pv.add_argument("--v1")
    pv.add_argument("--v2")
    pv.add_argument("--t-list", type=_floats, default=[])
    pv.add_argument("--cutoffs", type=_floats, default=[])
    pv.add_argument("--radii", type=_floats, default=[])
    return p


def config_from_args(ns):
    fields = ExperimentConfig.__dataclass_fields__
    kw = {k: v for k, v in vars(ns).items() if k in fields and v is not None}
    return ExperimentConfig(**kw)


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        code, text = run(config_from_args(ns))
    except (ConfigInvalid, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except GraphFKIError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not ns.output:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
