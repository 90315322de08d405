"""Command-line front end.

Every command reads one JSON config (schema version 1), runs a single
experiment and writes ``<out>/<command>.json`` plus fixed-column CSV tables.
Reports are deterministic for a given config and seed; wall-clock data goes
to ``<command>.meta.json`` next to the report.

Exit status: 0 success, 2 config or usage error, 3 numeric failure,
4 verdict differs from the config's ``expect`` block.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import re
import sys
import tempfile
import time
import warnings
from fractions import Fraction

import numpy as np

from . import __version__
from . import algebra as A
from . import diagnostics as D
from . import embedding as M
from . import topology as T
from .domains import Ambient, CompactSet, make_family, sample, SectorDomain
from .errors import (ConfigError, DomainError, FamilyMismatchError, GafunError, ParseError,
                     WeightFormError)
from .kernels import PiecewiseLinearDensity

log = logging.getLogger("gafun")

SCHEMA_VERSION = 1
COMMANDS = ("embed", "product", "derive", "norm", "laurent", "pointvalue", "associate",
            "sharp", "psi", "chain", "hull", "null")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERDICT = 0, 2, 3, 4


# -- config -------------------------------------------------------------------------

class Config:
    """Parsed config with the raw text kept for line lookups."""

    def __init__(self, data, text="", path=""):
        self.data, self.text, self.path = data, text, path

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err.strerror}") from err
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON: {err.msg} (column {err.colno})", err.lineno) from err
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object", 1)
        cfg = cls(data, text, path)
        version = data.get("version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {version!r}; expected {SCHEMA_VERSION}",
                              cfg.line_of("version") or 1)
        return cfg

    def line_of(self, key):
        m = re.search(r'"%s"\s*:' % re.escape(str(key)), self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else None

    def error(self, message, key=None):
        return ConfigError(message, self.line_of(key) if key is not None else None)

    def get(self, key, default=None):
        return self.data.get(key, default)

    def params(self):
        p = self.data.get("params", {})
        if not isinstance(p, dict):
            raise self.error("'params' must be an object", "params")
        return p

    def require(self, p, key, kind=None):
        if key not in p:
            raise self.error(f"missing required parameter '{key}'", "params")
        v = p[key]
        if kind is not None and not isinstance(v, kind):
            raise self.error(f"parameter '{key}' has the wrong type", key)
        return v

    def positive(self, p, key, default):
        v = p.get(key, default)
        if not isinstance(v, (int, float)) or not v > 0:
            raise self.error(f"'{key}' must be a positive number", key)
        return v

    def hash(self):
        canon = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def build_family(cfg):
    spec = cfg.get("family", {"kind": "at_infinity"})
    if not isinstance(spec, dict):
        raise cfg.error("'family' must be an object", "family")
    try:
        amb = spec.get("ambient")
        ambient = None
        if amb is not None:
            lo = [(-math.inf if v is None else float(v)) for v in amb["lower"]]
            hi = [(math.inf if v is None else float(v)) for v in amb["upper"]]
            ambient = Ambient(tuple(lo), tuple(hi))
        return make_family(spec.get("kind", "at_infinity"), ambient, spec.get("x0"),
                           spec.get("side", "both"))
    except (DomainError, KeyError, TypeError, ValueError) as err:
        raise cfg.error(f"invalid family: {err}", "family") from err


def build_weight(cfg, spec, key="weight"):
    if spec is None:
        return A.WeightFunction()
    try:
        return A.WeightFunction.from_dict(spec)
    except (WeightFormError, TypeError, ValueError) as err:
        raise cfg.error(f"invalid weight: {err}", key) from err


def build_space(cfg, spec, family, key="space"):
    if not isinstance(spec, dict) or not isinstance(spec.get("n"), int) or spec["n"] < 1:
        raise cfg.error("a space needs an integer index n >= 1", key)
    return A.SpaceIndex(spec["n"], build_weight(cfg, spec.get("weight")), family)


def build_density(cfg, spec, key):
    kind = spec.get("kind")
    try:
        if kind == "triangle":
            return PiecewiseLinearDensity.triangle(spec.get("center", 0.0),
                                                   spec.get("half_width", 1.0),
                                                   spec.get("height"), spec.get("label", "triangle"))
        if kind == "table":
            pts = np.asarray(spec["points"], dtype=float)
            return PiecewiseLinearDensity.from_table(pts[:, 0], pts[:, 1], spec.get("label", "table"))
        if kind == "gaussian":
            return M.gaussian_density(spec.get("center", 0.0), spec.get("width", 1.0))
    except (KeyError, IndexError, TypeError, ValueError) as err:
        raise cfg.error(f"invalid density: {err}", key) from err
    raise cfg.error(f"unknown density kind {kind!r}", key)


def build_object(cfg, name, family):
    objs = cfg.get("objects", {})
    if not isinstance(objs, dict) or name not in objs:
        raise cfg.error(f"unknown object '{name}'", "objects")
    spec = objs[name]
    if not isinstance(spec, dict):
        raise cfg.error(f"object '{name}' must be an object", name)
    t = spec.get("type")
    try:
        if t == "delta":
            return M.embed_delta(spec.get("x0", 0.0), spec.get("order", 0), family)
        if t == "expression":
            return A.Representative.from_text(spec["text"], None, spec.get("k", 1))
        if t == "analytic":
            w = spec.get("weight")
            return M.embed_analytic(spec["expression"], spec.get("alpha", 1.0), family,
                                    weight=build_weight(cfg, w, name) if w else None)
        if t == "compact":
            d = build_density(cfg, spec.get("density", {}), name)
            return M.embed_compact(M.ClassicalObject.compact(d), family)
        if t in ("heaviside", "constant_at_infinity"):
            if t == "heaviside":
                obj = M.ClassicalObject.heaviside(spec.get("jump_at", 0.0))
            else:
                dens = spec.get("density")
                obj = M.ClassicalObject.constant_at_infinity(
                    spec.get("c_minus", 0.0), spec.get("c_plus", 0.0),
                    build_density(cfg, dens, name) if dens else None, spec.get("jump_at", 0.0))
            return M.embed_constant_at_infinity(obj, family)
        if t == "polynomial_at_infinity":
            dens = spec.get("density")
            return M.embed_polynomial_at_infinity(spec["coeffs"],
                                                  build_density(cfg, dens, name) if dens else None,
                                                  family)
    except ParseError as err:
        raise cfg.error(f"object '{name}': {err}", name) from err
    except (FamilyMismatchError, DomainError, NotImplementedError) as err:
        raise cfg.error(f"object '{name}': {err}", name) from err
    except (KeyError, TypeError) as err:
        raise cfg.error(f"object '{name}': missing or invalid field {err}", name) from err
    raise cfg.error(f"object '{name}' has unknown type {t!r}", name)


def build_test_function(cfg, spec, key="test_function"):
    if not isinstance(spec, dict):
        raise cfg.error("test function must be an object", key)
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        return D.TestFunction.gaussian(spec.get("center", 0.0), spec.get("width", 1.0),
                                       spec.get("cutoff", 8.0))
    if kind == "bump":
        return D.TestFunction.bump(spec.get("center", 0.0), spec.get("radius", 1.0),
                                   spec.get("coeffs", (1.0,)))
    raise cfg.error(f"unknown test function kind {kind!r}", key)


def xi_grid(cfg, spec, key="xi"):
    spec = spec or {}
    start = cfg.positive(spec, "start", 0.1)
    ratio = cfg.positive(spec, "ratio", 2.0)
    count = spec.get("count", 12)
    if ratio <= 1 or not isinstance(count, int) or count < 2:
        raise cfg.error("xi grid needs ratio > 1 and an integer count >= 2", key)
    return start / ratio ** np.arange(count)


def compact(cfg, spec, k=1, key="K"):
    spec = spec or {"lower": [-1.0] * k, "upper": [1.0] * k}
    try:
        return CompactSet(tuple(map(float, spec["lower"])), tuple(map(float, spec["upper"])))
    except (KeyError, TypeError, ValueError, DomainError) as err:
        raise cfg.error(f"invalid compact set: {err}", key) from err


# -- output ---------------------------------------------------------------------------

def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (complex, np.complexfloating)):
        return [_clean(float(v.real)), _clean(float(v.imag))]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


def write_atomic(path, text):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


class Run:
    """Collects the report, tables and verdict of one command."""

    def __init__(self, command, cfg, seed, budget, precision):
        self.command, self.cfg = command, cfg
        self.seed, self.budget, self.precision = seed, budget, precision
        self.report = {}
        self.tables = {}
        self.verdict = {}

    def table(self, name, header, rows):
        self.tables[name] = (header, list(rows))

    def write(self, out):
        doc = {"command": self.command, "schema_version": SCHEMA_VERSION,
               "package_version": __version__, "config_hash": self.cfg.hash(),
               "seed": self.seed, "budget": self.budget, "precision": self.precision,
               "verdict": self.verdict, "report": self.report,
               "tables": {k: f"{self.command}_{k}.csv" for k in sorted(self.tables)}}
        paths = [os.path.join(out, f"{self.command}.json")]
        write_atomic(paths[0], json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
        for k, (header, rows) in sorted(self.tables.items()):
            p = os.path.join(out, f"{self.command}_{k}.csv")
            write_atomic(p, csv_text(header, rows))
            paths.append(p)
        return paths


# -- commands ---------------------------------------------------------------------------

def _norm_rows(f, space, family, budget, seed, levels=3):
    rows = []
    for j in range(levels):
        s = A.SpaceIndex(space.n + j, space.weight, family)
        g = sample(SectorDomain(s.n, family), budget, seed=seed)
        c = A.norm_estimate(f, s, g)
        rows.append((s.n, c.estimate, c.initial_estimate, c.stable))
    return rows


def _mp_check(run, f, grid):
    """Extended precision: re-evaluate at the first grid points with mpmath."""
    m = min(8, len(grid))
    worst = 0.0
    for i in range(m):
        z = complex(grid.x[i, 0], grid.y[i, 0])
        v = complex(A.evaluate(f, np.array([z]), np.array([grid.zeta[i]]))[0])
        w = complex(A.evaluate_mp(f, z, grid.zeta[i]))
        worst = max(worst, abs(v - w) / max(abs(w), 1e-300))
    run.report["extended_precision"] = {"points": m, "max_rel_diff": worst, "dps": 40}


def cmd_embed(run):
    """Embed one object; report its body, claimed space, bound constant and norm table."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    name = cfg.require(p, "object", str)
    f = build_object(cfg, name, fam)
    run.report["object"] = name
    run.report["body"] = str(f)
    run.report["space"] = f.space.to_dict() if f.space else None
    run.report["bound"] = f.bound
    if f.space is not None:
        g = sample(SectorDomain(f.space.n, fam), run.budget, seed=run.seed)
        c = A.norm_estimate(f, f.space, g)
        run.report["norm"] = c.to_dict()
        if f.bound:
            sup, C = M.bound_check(f, g)
            run.report["bound_check"] = {"sampled_sup": sup, "constant": C, "passed": sup <= C + 1e-9}
            run.verdict["bound_ok"] = bool(sup <= C + 1e-9)
        rows = _norm_rows(f, f.space, fam, run.budget, run.seed)
        run.table("norms", ["n", "estimate", "initial_estimate", "stable"], rows)
        run.verdict["stable"] = bool(c.stable)
        if run.precision == "extended":
            _mp_check(run, f, g)


def _binary(run, op):
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "left", str), fam)
    g = build_object(cfg, cfg.require(p, "right", str), fam)
    h = op(f, g)
    run.report.update(left=str(f), right=str(g), result=str(h),
                      space=h.space.to_dict() if h.space else None)
    if h.space is not None and f.space is not None and g.space is not None:
        grid = sample(SectorDomain(h.space.n, fam), run.budget, seed=run.seed)
        ef = float(np.max(A.weighted_values(f, f.space, grid)))
        eg = float(np.max(A.weighted_values(g, g.space, grid)))
        eh = float(np.max(A.weighted_values(h, h.space, grid)))
        run.report["estimates"] = {"left": ef, "right": eg, "result": eh}
        ok = eh <= ef * eg * (1 + 1e-12)
        run.verdict["product_bound"] = bool(ok)
        run.table("estimates", ["operand", "n", "estimate"],
                  [("left", f.space.n, ef), ("right", g.space.n, eg), ("result", h.space.n, eh)])


def cmd_product(run):
    """Multiply two objects and compare the product estimate with the product of estimates."""
    _binary(run, A.mul)


def cmd_derive(run):
    """Differentiate an object in z and estimate the norm at the derivative index."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "object", str), fam)
    axis = p.get("axis", 1)
    h = A.differentiate(f, axis)
    run.report.update(object=str(f), derivative=str(h),
                      space=h.space.to_dict() if h.space else None)
    if h.space is not None:
        g = sample(SectorDomain(h.space.n, fam), run.budget, seed=run.seed)
        c = A.norm_estimate(h, h.space, g)
        run.report["norm"] = c.to_dict()
        run.verdict["stable"] = bool(c.stable)
        run.table("norms", ["n", "estimate", "initial_estimate", "stable"],
                  _norm_rows(h, h.space, fam, run.budget, run.seed))


def cmd_norm(run):
    """Sampled weighted sup-norm estimate with its stability flag."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "object", str), fam)
    s = build_space(cfg, p.get("space") or (f.space.to_dict() if f.space else None), fam)
    g = sample(SectorDomain(s.n, fam), run.budget, cfg.positive(p, "zeta_floor", 1e-8), run.seed)
    c = A.norm_estimate(f, s, g, refine_steps=p.get("refine_steps", 1))
    run.report.update(object=str(f), norm=c.to_dict())
    run.verdict.update(stable=bool(c.stable), estimate=c.estimate)
    run.table("norms", ["n", "estimate", "initial_estimate", "stable"],
              _norm_rows(f, s, fam, run.budget, run.seed, p.get("levels", 3)))
    if run.precision == "extended":
        _mp_check(run, f, g)


def cmd_laurent(run):
    """Laurent coefficients of zeta -> f(x, zeta) at a point of O_n."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "object", str), fam)
    x = float(cfg.require(p, "x", (int, float)))
    J = p.get("J", 16)
    s = D.laurent(f, x, p.get("r"), J, p.get("n"), fam)
    run.report.update(object=str(f), series=s.to_dict())
    run.verdict["residual"] = s.residual
    run.table("coefficients", ["j", "re", "im", "abs"],
              [(j, c.real, c.imag, abs(c)) for j, c in zip(range(-J, J + 1), s.coefficients)])


def cmd_pointvalue(run):
    """Point value as a generalized number: sector norm and invertibility probe."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "object", str), fam)
    x = float(cfg.require(p, "x", (int, float)))
    a = D.pointvalue(f, x)
    n = p.get("n", a.n)
    norm = D.gn_norm(a, n, budget=run.budget, seed=run.seed)
    probe = D.gn_invertibility_probe(a, n=n)
    xi = xi_grid(cfg, p.get("xi"))
    vals = a(xi.astype(complex))
    run.report.update(object=str(f), x=x, n=n, gn_norm=norm,
                      invertibility={"invertible_so_far": probe.invertible_so_far, "m": probe.m,
                                     "detail": probe.detail})
    run.verdict.update(gn_norm=norm, invertible=bool(probe.invertible_so_far))
    run.table("values", ["xi", "re", "im"], [(t, v.real, v.imag) for t, v in zip(xi, vals)])
    if run.precision == "extended" and a.body is not None:
        import mpmath
        from .expr import evaluate_mp
        diffs = [abs(complex(evaluate_mp(a.body, {"zeta": mpmath.mpf(t)})) - v) / max(abs(v), 1e-300)
                 for t, v in zip(xi, vals)]
        run.report["extended_precision"] = {"max_rel_diff": max(diffs), "dps": 40}


def cmd_associate(run):
    """Pairing with a test function and Richardson extrapolation as xi -> 0."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "object", str), fam)
    phi = build_test_function(cfg, p.get("test_function", {"kind": "gaussian"}))
    xi = xi_grid(cfg, p.get("xi"))
    r = D.associate(f, phi, xi, cfg.positive(p, "tol", D.ASSOCIATION_TOL))
    run.report.update(object=str(f), test_function=phi.to_dict(), association=r.to_dict())
    run.verdict.update(divergent=r.divergent, order=r.order,
                       limit=None if r.limit is None else r.limit.real,
                       low_confidence=r.low_confidence)
    run.table("pairing", ["xi", "re", "im"], [(t, v.real, v.imag) for t, v in zip(r.xi, r.values)])


def cmd_sharp(run):
    """Membership in a sharp neighborhood V(K, p, q)."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "object", str), fam)
    V = T.SharpNeighborhood(compact(cfg, p.get("K"), f.k), p.get("p", 0), p.get("q", 1))
    xi = xi_grid(cfg, p.get("xi"))
    v = T.sharp_membership(f, V, xi)
    run.report.update(object=str(f), neighborhood={"K": V.K.to_dict(), "p": V.p, "q": V.q},
                      verdict=v.to_dict())
    run.verdict.update(member=v.member)
    S = A.sup_on_compact(f, V.K, xi, f.features)
    run.table("sup", ["xi", "sup"], zip(xi, S))


def _sequence(cfg, p, fam, key):
    spec = cfg.require(p, key)
    if isinstance(spec, list):
        return [build_object(cfg, name, fam) for name in spec]
    if isinstance(spec, dict) and "template" in spec:
        lo, hi = spec.get("range", [1, 12])
        try:
            return [A.Representative.from_text(spec["template"].replace("{p}", f"({q})"))
                    for q in range(int(lo), int(hi) + 1)]
        except ParseError as err:
            raise cfg.error(f"sequence template: {err}", key) from err
    raise cfg.error(f"'{key}' must be a list of object names or a template", key)


def cmd_psi(run):
    """psi-construction for a sequence in the unit ball with its q0(eps) table."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    fs = _sequence(cfg, p, fam, "sequence")
    lim = p.get("limit")
    f_lim = build_object(cfg, lim, fam) if lim else A.Representative.constant(0.0)
    n = cfg.require(p, "n", int)
    w = build_weight(cfg, p.get("weight"))
    eps = tuple(p.get("eps", T.DEFAULT_EPS))
    c = T.construct_psi(n, w, fam, fs, f_lim, eps, run.budget, run.seed, p.get("mode", "sampled"))
    run.report["certificate"] = c.to_dict()
    run.verdict.update(verified=c.verified, q0={f"{e:g}": q for e, q in c.q0.items()})
    run.table("q0", ["eps", "q0", "q0_grid"], c.q0_rows())
    run.table("nu", ["r", "nu"], c.nu_rows())


def cmd_chain(run):
    """Space chain with product, derivative and stability certificates."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    base = build_space(cfg, p.get("base", {"n": 1}), fam, "base")
    steps = cfg.require(p, "steps", int)
    corpus = {name: build_object(cfg, name, fam) for name in p.get("corpus", [])}
    try:
        r = T.build_chain(base, steps, corpus, budget=run.budget, seed=run.seed)
    except WeightFormError as err:
        raise cfg.error(str(err), "steps") from err
    run.report["chain"] = r.to_dict()
    run.verdict.update(passed=r.passed, indices=r.chain.indices)
    run.table("spaces", ["level", "n", "c", "poly", "blowup", "shells"],
              [(i, s.n, s.weight.c, s.weight.poly, s.weight.blowup, len(s.weight.shells))
               for i, s in enumerate(r.chain)])
    rows = []
    for kind in ("product", "derivative", "stability"):
        for c in getattr(r, kind):
            label = "*".join(c["pair"]) if "pair" in c else c["element"]
            rows.append((kind, c["level"], label, c.get("lhs", c.get("estimate")), c.get("rhs", ""),
                         c["passed"]))
    run.table("certificates", ["kind", "level", "subject", "value", "bound", "passed"], rows)


def cmd_hull(run):
    """l1-hull membership of a weighted combination of generators."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    names = cfg.require(p, "generators", list)
    h = T.hull([build_object(cfg, nm, fam) for nm in names], names)
    if "product_with" in p:
        names2 = p["product_with"]
        h2 = T.hull([build_object(cfg, nm, fam) for nm in names2], names2)
        h = T.hull_product(h, h2)
    weights = cfg.require(p, "weights", list)
    try:
        member = T.hull_member(h, weights)
        mass = T.weight_mass(weights)
    except (ValueError, ZeroDivisionError) as err:
        raise cfg.error(f"invalid hull weight: {err}", "weights") from err
    run.report.update(generators=list(h.labels), weights=[str(w) for w in weights],
                      mass=str(mass) if isinstance(mass, Fraction) else mass, member=member)
    if member:
        run.report["combination"] = str(T.hull_combination(h, weights))
    run.verdict["member"] = bool(member)
    run.table("generators", ["index", "label", "weight"],
              [(i + 1, lab, str(weights[i]) if i < len(weights) else "0")
               for i, lab in enumerate(h.labels)])


def cmd_null(run):
    """Null test: Laurent coefficients at probe points, then sector norms."""
    cfg, p = run.cfg, run.cfg.params()
    fam = build_family(cfg)
    f = build_object(cfg, cfg.require(p, "object", str), fam)
    if "minus" in p:
        f = A.sub(f, build_object(cfg, p["minus"], fam))
    probes = [float(x) for x in cfg.require(p, "probes", list)]
    n = p.get("n") or (f.space.n if f.space else None)
    if n is None:
        raise cfg.error("null test needs 'n' when the object has no claimed space", "params")
    r = D.null_test(f, probes, p.get("J", 16), cfg.positive(p, "tol", D.LAURENT_ZERO_TOL), n, fam,
                    run.budget)
    run.report.update(object=str(f), result=r.to_dict())
    run.verdict.update(zero=r.zero)
    rows = []
    for s in r.series:
        for j, c in zip(range(-s.J, s.J + 1), s.coefficients):
            rows.append((s.center, j, abs(c)))
    run.table("coefficients", ["x", "j", "abs"], rows)


HANDLERS = {"embed": cmd_embed, "product": cmd_product, "derive": cmd_derive, "norm": cmd_norm,
            "laurent": cmd_laurent, "pointvalue": cmd_pointvalue, "associate": cmd_associate,
            "sharp": cmd_sharp, "psi": cmd_psi, "chain": cmd_chain, "hull": cmd_hull,
            "null": cmd_null}


def check_expect(run):
    expect = run.cfg.get("expect")
    if not expect:
        return []
    if not isinstance(expect, dict):
        raise run.cfg.error("'expect' must be an object", "expect")
    tol = expect.get("tol", 1e-6)
    bad = []
    for k, want in expect.items():
        if k == "tol":
            continue
        if k not in run.verdict:
            raise run.cfg.error(f"expect key '{k}' is not produced by '{run.command}'", k)
        got = _clean(run.verdict[k])
        if isinstance(want, (int, float)) and not isinstance(want, bool) and \
                isinstance(got, (int, float)) and not isinstance(got, bool):
            ok = abs(got - want) <= tol * max(1.0, abs(want))
        else:
            ok = got == want
        if not ok:
            bad.append(f"{k}: expected {want!r}, got {got!r}")
    return bad


# -- entry point ------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="gafun", description="Generalized-function experiments "
                                 "on sector domains.")
    ap.add_argument("--version", action="version", version=f"gafun {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name).strip().split("\n")[0])
        sp.add_argument("--config", required=True, help="JSON config (schema version 1)")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--precision", choices=("standard", "extended"), default=None)
        sp.add_argument("--budget", type=int, default=None, help="sample budget per grid")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    t0 = time.time()
    try:
        cfg = Config.load(args.config)
        declared = cfg.get("command")
        if declared is not None and declared != args.command:
            raise cfg.error(f"config is for '{declared}', not '{args.command}'", "command")
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        budget = args.budget if args.budget is not None else cfg.get("budget", 2000)
        precision = args.precision or cfg.get("precision", "standard")
        if not isinstance(seed, int) or not isinstance(budget, int) or budget < 1:
            raise cfg.error("seed must be an integer and budget a positive integer", "budget")
        if precision not in ("standard", "extended"):
            raise cfg.error(f"unknown precision {precision!r}", "precision")
        run = Run(args.command, cfg, seed, budget, precision)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", D.SupportWarning)
            HANDLERS[args.command](run)
        msgs = sorted({str(w.message) for w in caught})
        if msgs:
            run.report["warnings"] = msgs
            for m in msgs:
                log.warning(m)
        bad = check_expect(run)
        paths = run.write(args.out)
        meta = {"started": t0, "elapsed_s": time.time() - t0, "python": platform.python_version(),
                "numpy": np.__version__, "argv": list(argv if argv is not None else sys.argv[1:])}
        write_atomic(os.path.join(args.out, f"{args.command}.meta.json"),
                     json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except GafunError as err:
        print(f"numeric failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(p)
    if bad:
        for line in bad:
            print(f"verdict mismatch: {line}", file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
