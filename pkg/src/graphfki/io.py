"""JSON graph files, CSV dumps and atomic output."""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import GraphError, ParseError
from .graph import Potential, build_graph, generate

# {"vertices": [{"id", "m", "v"}], "edges": [{"u", "v", "b", "theta"}]}
# or {"generator": {"family": ..., "params": {...}}}


def _field(rec, name, where, kind=None, required=True, default=None):
    if name not in rec:
        if required:
            raise ParseError(kind or f"Missing{name.capitalize()}",
                             f"missing field '{name}'", where)
        return default
    val = rec[name]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ParseError("BadValue", f"'{name}' must be a number, got {val!r}", where)
    return val


def graph_from_dict(data):
    """Parse the JSON graph schema; returns ``(graph, theta, potential)``."""
    if not isinstance(data, dict):
        raise ParseError("BadSchema", "top level must be an object")
    if "generator" in data:
        spec = data["generator"]
        if not isinstance(spec, dict) or "family" not in spec:
            raise ParseError("BadSchema", "generator needs a 'family'", "generator")
        try:
            return generate(spec["family"], **spec.get("params", {}))
        except GraphError as exc:
            raise ParseError(type(exc).__name__, str(exc), "generator") from exc
    verts = data.get("vertices")
    if not isinstance(verts, list) or not verts:
        raise ParseError("BadSchema", "'vertices' must be a nonempty list", "vertices")
    edges = data.get("edges", [])
    if not isinstance(edges, list):
        raise ParseError("BadSchema", "'edges' must be a list", "edges")

    measure, pot = {}, {}
    for k, rec in enumerate(verts):
        where = f"vertices[{k}]"
        if not isinstance(rec, dict):
            raise ParseError("BadSchema", "vertex record must be an object", where)
        vid = rec.get("id")
        if isinstance(vid, bool) or not isinstance(vid, int):
            raise ParseError("BadVertexId", f"id must be an integer, got {vid!r}", where)
        if vid in measure:
            raise ParseError("DuplicateVertex", f"vertex {vid} listed twice", where)
        measure[vid] = _field(rec, "m", where, kind="MissingMeasure")
        pot[vid] = _field(rec, "v", where, required=False, default=0.0)

    recs = []
    for k, rec in enumerate(edges):
        where = f"edges[{k}]"
        if not isinstance(rec, dict):
            raise ParseError("BadSchema", "edge record must be an object", where)
        u = rec.get("u")
        w = rec.get("v")
        for name, val in (("u", u), ("v", w)):
            if isinstance(val, bool) or not isinstance(val, int):
                raise ParseError("BadVertexId", f"'{name}' must be an integer", where)
        b = _field(rec, "b", where, kind="MissingWeight")
        th = _field(rec, "theta", where, required=False, default=0.0)
        if not abs(th) <= math.pi:
            raise ParseError("ThetaOutOfRange",
                             f"theta = {th!r} is outside [-pi, pi]", f"{where}.theta")
        recs.append((u, w, b, th))
    try:
        g, theta = build_graph(recs, measure)
    except GraphError as exc:
        raise ParseError(type(exc).__name__, str(exc)) from exc
    return g, theta, Potential(np.array([float(pot[k]) for k in range(g.n)]))


def graph_to_dict(g, theta, v=None):
    v = np.zeros(g.n) if v is None else np.asarray(v, dtype=float)
    return {
        "vertices": [{"id": x, "m": float(g.m[x]), "v": float(v[x])} for x in range(g.n)],
        "edges": [{"u": int(a), "v": int(b), "b": float(w), "theta": float(th)}
                  for (a, b), w, th in zip(g.edges, g.b, theta.values)],
    }


def dumps(obj):
    """Canonical JSON text: sorted keys, shortest round-trip floats."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def load_graph(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError("IoError", str(exc)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("InvalidJson", exc.msg, f"line {exc.lineno}, column {exc.colno}") from exc
    return graph_from_dict(data)


def save_graph(path, g, theta, v=None):
    write_atomic(path, dumps(graph_to_dict(g, theta, v)))


def write_atomic(path, text):
    """Write via a temporary file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def kernel_csv(op, K):
    lines = ["x,y,re,im"]
    for i, x in enumerate(op.subset):
        for j, y in enumerate(op.subset):
            z = complex(K[i, j])
            lines.append(f"{x},{y},{z.real!r},{z.imag!r}")
    return "\n".join(lines) + "\n"


def spectrum_csv(eigenvalues):
    lines = ["index,eigenvalue"]
    lines += [f"{k},{float(e)!r}" for k, e in enumerate(eigenvalues)]
    return "\n".join(lines) + "\n"
