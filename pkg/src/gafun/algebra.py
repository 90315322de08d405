"""Representatives, the weighted spaces H_{n,phi}, and ring operations on them.

A representative pairs a holomorphic body (an expression tree over z1..zk and
zeta, possibly with convolution leaves) with the space it is claimed to live
in. Space claims propagate syntactically:

    add/sub : (max n, pointwise-dominating weight)
    mul     : (n_f + n_g, phi_f * phi_g)
    d/dz_i  : (n + 1, phi * (n + 1) / min(d(x, boundary), 1))

Norm estimates are sampled lower bounds of the weighted sup, never proofs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import expr as E
from .domains import (SectorDomain, ShrinkingFamily, SampleGrid, CompactSet, focus, polish, refine,
                      shell_index, make_family)
from .errors import EvaluationError, FitError, PoleError, PreconditionError, WeightFormError
from .parser import parse

MAX_WEIGHT_CONST = 1e200
MAX_WEIGHT_EXPONENT = 64
MAX_SHELLS = 256


# -- weights ------------------------------------------------------------------

@dataclass(frozen=True)
class WeightFunction:
    """phi(x) = c * (1+|x|)^poly * min(d(x, boundary), 1)^(-blowup) * nu_{r(x)}.

    ``shells`` holds nu_1..nu_R on the exhaustion shells K_r minus K_{r-1};
    indices past R reuse nu_R. An empty table means nu = 1.
    """

    c: float = 1.0
    poly: int = 0
    blowup: int = 0
    shells: tuple = ()

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise WeightFormError(f"weight constant must be positive and finite, got {self.c}")
        if self.c > MAX_WEIGHT_CONST:
            raise WeightFormError(f"weight constant {self.c:.3g} exceeds the catalog limit")
        if self.poly < 0 or self.blowup < 0:
            raise WeightFormError("weight exponents must be nonnegative")
        if max(self.poly, self.blowup) > MAX_WEIGHT_EXPONENT:
            raise WeightFormError("weight exponent exceeds the catalog limit")
        sh = tuple(float(v) for v in self.shells)
        if len(sh) > MAX_SHELLS:
            raise WeightFormError(f"more than {MAX_SHELLS} shells")
        if any(not (v > 0 and math.isfinite(v)) or v > MAX_WEIGHT_CONST for v in sh):
            raise WeightFormError("shell values must be positive, finite and within the catalog")
        object.__setattr__(self, "shells", sh)

    @classmethod
    def constant(cls, c=1.0):
        return cls(c=float(c))

    def _shell_values(self, r):
        if not self.shells:
            return np.ones(np.shape(r))
        idx = np.clip(np.asarray(r) - 1, 0, len(self.shells) - 1)
        return np.array(self.shells)[idx]

    def __call__(self, x, ambient):
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, ambient.k)
        out = np.full(len(pts), self.c)
        if self.poly:
            out *= (1.0 + np.linalg.norm(pts, axis=1)) ** self.poly
        if self.blowup:
            d = np.minimum(ambient.boundary_distance(pts), 1.0)
            out *= d ** (-self.blowup)
        if self.shells:
            out *= self._shell_values(shell_index(ambient, pts))
        return out

    def sup_on(self, r):
        """Upper bound of phi on K_r = {|x| <= r, d(x, boundary) >= 1/r}."""
        r = max(int(r), 1)
        nu = max(self.shells[:r]) if self.shells else 1.0
        return self.c * (1.0 + r) ** self.poly * float(r) ** self.blowup * nu

    def times(self, other):
        n = max(len(self.shells), len(other.shells))
        sh = ()
        if n:
            sh = tuple(float(a * b) for a, b in zip(self._shell_values(np.arange(1, n + 1)),
                                                   other._shell_values(np.arange(1, n + 1))))
        return WeightFunction(self.c * other.c, self.poly + other.poly,
                              self.blowup + other.blowup, sh)

    def dominating_max(self, other):
        """A weight >= both arguments everywhere (every factor is >= its counterpart)."""
        n = max(len(self.shells), len(other.shells))
        sh = ()
        if n:
            sh = tuple(float(max(a, b)) for a, b in zip(self._shell_values(np.arange(1, n + 1)),
                                                        other._shell_values(np.arange(1, n + 1))))
        return WeightFunction(max(self.c, other.c), max(self.poly, other.poly),
                              max(self.blowup, other.blowup), sh)

    def derivative(self, n):
        """psi = phi * (n+1)/min(d, 1): the derivative target weight for index n."""
        return WeightFunction(self.c * (n + 1), self.poly, self.blowup + 1, self.shells)

    def with_shells(self, shells):
        return replace(self, shells=tuple(shells))

    def describe(self):
        parts = [f"{self.c:g}"]
        if self.poly:
            parts.append(f"(1+|x|)^{self.poly}")
        if self.blowup:
            parts.append(f"min(d,1)^-{self.blowup}")
        if self.shells:
            parts.append(f"shells[{len(self.shells)}]")
        return "*".join(parts)

    def to_dict(self):
        return {"c": self.c, "poly": self.poly, "blowup": self.blowup, "shells": list(self.shells)}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d.get("c", 1.0)), int(d.get("poly", 0)), int(d.get("blowup", 0)),
                   tuple(d.get("shells", ())))


@dataclass(frozen=True)
class SpaceIndex:
    """The pair (n, phi) naming H_{n,phi} for a given shrinking family."""

    n: int
    weight: WeightFunction = field(default_factory=WeightFunction)
    family: ShrinkingFamily = field(default_factory=lambda: make_family("at_infinity"))

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError(f"space index must be a positive integer, got {self.n}")

    def domain(self):
        return SectorDomain(self.n, self.family)

    def to_dict(self):
        return {"n": self.n, "weight": self.weight.to_dict(), "family": self.family.to_dict()}


def join_spaces(s, t):
    if s is None or t is None:
        return None
    if s.family != t.family:
        return None
    return SpaceIndex(max(s.n, t.n), s.weight.dominating_max(t.weight), s.family)


def product_space(s, t):
    if s is None or t is None or s.family != t.family:
        return None
    return SpaceIndex(s.n + t.n, s.weight.times(t.weight), s.family)


# -- representatives ------------------------------------------------------------

@dataclass(frozen=True)
class Representative:
    """A holomorphic function of (z, zeta) with an optional claimed space."""

    body: E.Expr
    space: Optional[SpaceIndex] = None
    note: str = ""
    k: int = 1
    features: tuple = field(default=(), compare=False)
    bound: Optional[dict] = field(default=None, compare=False)

    @classmethod
    def from_text(cls, text, space=None, k=1, note=""):
        return cls(parse(text, k), space, note or text, k)

    @classmethod
    def constant(cls, c, space=None):
        return cls(E.const(c), space, f"const {c}")

    def __str__(self):
        return E.to_string(self.body)

    def with_space(self, space):
        return replace(self, space=space)


def _var_names(k):
    return [f"z{i}" for i in range(1, k + 1)]


def _env(f, z, zeta):
    z = np.asarray(z, dtype=complex)
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    if f.k == 1:
        z = np.atleast_1d(z).reshape(-1)
        z, zeta = np.broadcast_arrays(z, zeta)
        return {"z1": z, "zeta": zeta}, len(zeta)
    z = np.atleast_2d(z)
    env = {name: z[:, i] for i, name in enumerate(_var_names(f.k))}
    env["zeta"] = np.broadcast_to(zeta, (len(z),))
    return env, len(z)


def evaluate(f, z, zeta):
    """Evaluate on arrays of points; errors carry the offending point."""
    env, size = _env(f, z, zeta)
    try:
        return E.evaluate(f.body, env, size)
    except EvaluationError as err:
        if err.index is not None and err.index < size:
            i = err.index
            raise err.at({name: complex(np.atleast_1d(v)[i]) for name, v in env.items()})
        raise


def evaluate_mp(f, z, zeta, dps=40):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    env = {name: complex(z[i]) for i, name in enumerate(_var_names(f.k))}
    env["zeta"] = complex(zeta)
    return E.evaluate_mp(f.body, env, dps)


def evaluate_grid(f, grid):
    z = grid.z if f.k > 1 else grid.z[:, 0]
    return evaluate(f, z, grid.zeta)


def _merge_features(*fs):
    return tuple(sorted({p for f in fs for p in f.features}))


def add(f, g):
    return Representative(E.add(f.body, g.body), join_spaces(f.space, g.space),
                          f"({f.note}) + ({g.note})", max(f.k, g.k), _merge_features(f, g))


def sub(f, g):
    return add(f, scale(-1, g))


def scale(c, f):
    bound = None
    if f.bound is not None and "constant" in f.bound:
        bound = dict(f.bound, constant=abs(c) * f.bound["constant"])
    return Representative(E.mul(c, f.body), f.space, f"{c}*({f.note})", f.k, f.features, bound)


def mul(f, g):
    return Representative(E.mul(f.body, g.body), product_space(f.space, g.space),
                          f"({f.note})*({g.note})", max(f.k, g.k), _merge_features(f, g))


def differentiate(f, axis=1):
    """Exact symbolic z_axis derivative; convolution leaves take the derivative on the kernel."""
    if not 1 <= axis <= f.k:
        raise PreconditionError(f"axis {axis} outside 1..{f.k}")
    body = E.diff(f.body, f"z{axis}")
    space = None
    if f.space is not None:
        space = SpaceIndex(f.space.n + 1, f.space.weight.derivative(f.space.n), f.space.family)
    return Representative(body, space, f"d/dz{axis}({f.note})", f.k, f.features)


def restrict_real(f):
    """(x, xi) -> f(x + 0i, xi): the map to real arguments."""
    def g(x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        x, xi = np.broadcast_arrays(x, xi)
        out = evaluate(f, x.ravel().astype(complex), xi.ravel().astype(complex))
        return out.reshape(x.shape)
    return g


# -- norm estimates ---------------------------------------------------------------

@dataclass(frozen=True)
class NormCertificate:
    """Sampled estimate of the H_{n,phi} norm; a lower bound for the sup."""

    space: SpaceIndex
    estimate: float
    initial_estimate: float
    stable: bool
    argmax: dict
    provenance: dict

    def to_dict(self):
        return {"space": self.space.to_dict(), "estimate": self.estimate,
                "initial_estimate": self.initial_estimate, "stable": self.stable,
                "argmax": self.argmax, "grid": self.provenance}


def _values_or_inf(f, grid, idx):
    # bisect around kernel poles so one bad point does not void the whole grid
    mask = np.zeros(len(grid), bool)
    mask[idx] = True
    try:
        return evaluate_grid(f, grid.subset(mask))
    except PoleError:
        if len(idx) == 1:
            return np.array([np.inf + 0j])
        h = len(idx) // 2
        return np.concatenate([_values_or_inf(f, grid, idx[:h]), _values_or_inf(f, grid, idx[h:])])


def weighted_values(f, s, grid):
    """|zeta|^n |f| / phi(x) at every grid point; kernel poles count as infinite."""
    vals = _values_or_inf(f, grid, np.arange(len(grid)))
    phi = s.weight(grid.x, s.family.ambient)
    with np.errstate(all="ignore"):
        out = np.abs(grid.zeta) ** s.n * np.abs(vals) / phi
    return np.where(np.isnan(out), np.inf, out)


def _argmax(grid, w):
    i = int(np.argmax(w))
    return {"x": grid.x[i].tolist(), "y": grid.y[i].tolist(),
            "zeta": [float(grid.zeta[i].real), float(grid.zeta[i].imag)], "branch": str(grid.branch[i])}


FLOOR_MARGIN = 100.0


def _shell_edges(weight):
    # phi jumps across |x| = r; the weighted sup is approached from inside
    r = np.arange(1, len(weight.shells))
    inner = r * (1.0 - 1e-12)
    return tuple(np.concatenate([inner, -inner]).tolist())


def _polished(f, s, V, g, feats, top=16):
    w = weighted_values(f, s, g)
    if len(g) and s.family.k == 1:
        best = np.argsort(w)[::-1][:top]
        extra = polish(V, g, best, feats)
        if len(extra):
            g = SampleGrid(np.concatenate([g.x, extra.x]), np.concatenate([g.y, extra.y]),
                           np.concatenate([g.zeta, extra.zeta]),
                           np.concatenate([g.branch, extra.branch]), g.provenance)
            w = np.concatenate([w, weighted_values(f, s, extra)])
    return g, w


def norm_estimate(f, s, grid, refine_steps=1, rtol=0.01):
    """max over the grid of |zeta|^n |f| / phi, then refined ``refine_steps`` times.

    ``stable`` is True when the last refinement changed the estimate by less than
    ``rtol`` and the sup over |zeta| >= FLOOR_MARGIN * floor is within ``rtol`` of it.
    """
    if grid.n < s.n:
        raise PreconditionError(f"grid from V_{grid.n} does not lie in V_{s.n}")
    fam = ShrinkingFamily.from_dict(grid.provenance["family"]) if "family" in grid.provenance \
        else s.family
    V = SectorDomain(grid.n, fam)
    feats = f.features + _shell_edges(s.weight)
    g, w = _polished(f, s, V, focus(V, grid, feats), feats)
    est0 = float(np.max(w))
    est, prev = est0, est0
    for i in range(refine_steps):
        g, w = _polished(f, s, V, focus(V, refine(V, g), feats, seed=i + 1), feats)
        prev, est = est, float(np.max(w))
    stable = bool(math.isfinite(est) and (est - prev) <= rtol * est) if est > 0 else True
    # growth toward the zeta floor means the sup is not attained: f is unbounded on V_n
    rho = np.abs(g.zeta)
    upper = rho >= FLOOR_MARGIN * rho.min()
    if stable and est > 0 and upper.any():
        stable = bool(est <= float(np.max(w[upper])) * (1 + rtol))
    return NormCertificate(s, est, est0, stable, _argmax(g, w), dict(g.provenance, size=len(g)))


# -- growth in xi on compacts -----------------------------------------------------

SLOPE_TOL = 0.05
MIN_FIT_POINTS = 8


def sup_on_compact(f, K, xi, extra=(), m=201):
    """sup over x in K (regular grid plus ``extra`` points) of |f(x, xi)| for each xi."""
    x = K.points(m, extra=[np.atleast_1d(e) for e in extra])
    xi = np.asarray(xi, dtype=float)
    X = np.repeat(x[:, 0], len(xi)).astype(complex) if f.k == 1 else np.repeat(x, len(xi), axis=0)
    XI = np.tile(xi, len(x)).astype(complex)
    try:
        with np.errstate(all="ignore"):
            v = np.abs(evaluate(f, X, XI)).reshape(len(x), len(xi))
    except EvaluationError:
        raise
    v = np.where(np.isnan(v), np.inf, v)
    return v.max(axis=0)


def _prepare_grid(xi):
    xi = np.asarray(xi, dtype=float)
    if len(xi) < MIN_FIT_POINTS:
        raise FitError(f"slope fit needs at least {MIN_FIT_POINTS} xi values, got {len(xi)}")
    if np.any(xi <= 0):
        raise FitError("xi values must be positive")
    return np.sort(xi)[::-1]


def tail_slope(xi, S, tail=MIN_FIT_POINTS):
    """Least-squares slope of log S against log xi over the ``tail`` smallest xi.

    Returns -inf if any tail value is infinite, +inf if the tail is identically 0.
    """
    order = np.argsort(xi)
    xs, ss = np.asarray(xi)[order][:tail], np.asarray(S)[order][:tail]
    if np.any(~np.isfinite(ss)):
        return -math.inf
    pos = ss > 0
    if pos.sum() < 2:
        return math.inf
    lx, ls = np.log(xs[pos]), np.log(ss[pos])
    slope = float(np.polyfit(lx, ls, 1)[0])
    # the steepest local slope bounds how fast the tail can still be turning
    local = np.diff(ls) / np.diff(lx)
    return min(slope, float(local.min())) if len(local) else slope


@dataclass(frozen=True)
class GrowthVerdict:
    passed: bool
    order: Optional[int]
    constant: Optional[float]
    slope: float
    detail: str = ""

    def to_dict(self):
        return {"passed": self.passed, "order": self.order, "constant": self.constant,
                "slope": self.slope, "detail": self.detail}


def moderateness_check(f, K, xi, N_max=12, extra=()):
    """Smallest N <= N_max with sup_K |f(x, xi)| <= C / xi^N on the grid tail (n = 0 case)."""
    xi = _prepare_grid(xi)
    S = sup_on_compact(f, K, xi, extra or f.features)
    slope = tail_slope(xi, S)
    if slope == math.inf:
        return GrowthVerdict(True, 0, 0.0, slope, "identically zero on the tail")
    if not math.isfinite(slope):
        return GrowthVerdict(False, None, None, slope, "non-finite values on the tail")
    N = max(0, int(math.ceil(-slope - SLOPE_TOL)))
    if N > N_max:
        return GrowthVerdict(False, None, None, slope, f"growth order {-slope:.3g} exceeds {N_max}")
    C = float(np.max(S * xi ** N))
    return GrowthVerdict(True, N, C, slope)


def negligibility_check(f, K, xi, q_max=12, extra=()):
    """sup_K |f(x, xi)| <= C xi^q for q = 1..q_max; reports the first failing q."""
    xi = _prepare_grid(xi)
    S = sup_on_compact(f, K, xi, extra or f.features)
    slope = tail_slope(xi, S)
    if slope == math.inf:
        return GrowthVerdict(True, q_max, 0.0, slope, "zero on the tail")
    if not math.isfinite(slope):
        return GrowthVerdict(False, 1, None, slope, "non-finite values on the tail")
    for q in range(1, q_max + 1):
        if slope < q - SLOPE_TOL:
            return GrowthVerdict(False, q, None, slope, f"decay order {slope:.3g} < {q}")
    with np.errstate(all="ignore"):
        C = float(np.max(np.where(S > 0, S * xi ** (-float(q_max)), 0.0)))
    return GrowthVerdict(True, q_max, C, slope)
