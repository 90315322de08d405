"""Shrinking families O_n, sector domains V_n = A_n u B_n and their sampling.

Points are handled in split real coordinates: ``x`` and ``y`` are arrays of
shape (N, k) with z = x + iy, ``zeta`` is a complex array of shape (N,).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, SamplingError

FAMILY_KINDS = ("point_interior", "point_boundary", "at_infinity", "near_boundary")

# Keeps sampled coordinates strictly inside open bounds.
_EDGE = 1e-9


def _as_points(x, k):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if k == 1 else x.reshape(1, -1)
    if x.shape[1] != k:
        raise DomainError(f"expected points of dimension {k}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class Ambient:
    """An open box in R^k; infinite bounds give R^k and half-spaces.

    Connectedness is automatic for boxes.
    """

    lower: tuple = (-math.inf,)
    upper: tuple = (math.inf,)

    def __post_init__(self):
        lo = tuple(-math.inf if v is None else float(v) for v in self.lower)
        hi = tuple(math.inf if v is None else float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise DomainError("ambient bounds must have equal positive length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise DomainError(f"empty ambient box {lo} x {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def real_space(cls, k=1):
        return cls((-math.inf,) * k, (math.inf,) * k)

    @property
    def k(self):
        return len(self.lower)

    @property
    def has_boundary(self):
        return any(math.isfinite(v) for v in self.lower + self.upper)

    def contains(self, x):
        x = _as_points(x, self.k)
        lo, hi = np.array(self.lower), np.array(self.upper)
        return np.all((x > lo) & (x < hi), axis=1)

    def closure_contains(self, x):
        x = _as_points(x, self.k)
        lo, hi = np.array(self.lower), np.array(self.upper)
        return np.all((x >= lo) & (x <= hi), axis=1)

    def boundary_distance(self, x):
        """d(x, complement of the box) for points inside; inf for R^k."""
        x = _as_points(x, self.k)
        lo, hi = np.array(self.lower), np.array(self.upper)
        d = np.minimum(x - lo, hi - x)
        return np.min(d, axis=1)

    def unbounded_directions(self):
        return [(i, s) for i in range(self.k)
                for s, b in ((-1, self.lower[i]), (1, self.upper[i])) if math.isinf(b)]

    def to_dict(self):
        enc = lambda v: None if math.isinf(v) else v  # noqa: E731
        return {"lower": [enc(v) for v in self.lower], "upper": [enc(v) for v in self.upper]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["lower"]), tuple(d["upper"]))


@dataclass(frozen=True)
class ShrinkingFamily:
    """Nested open sets O_1 ⊇ O_2 ⊇ ... inside the ambient set.

    ``side`` only matters for ``at_infinity`` in one dimension: "both" gives
    O_n = {|x| > n}, "+" gives {x > n}, "-" gives {x < -n}.
    """

    kind: str
    ambient: Ambient = field(default_factory=Ambient.real_space)
    x0: Optional[tuple] = None
    side: str = "both"

    @property
    def k(self):
        return self.ambient.k

    def in_O(self, x, n):
        x = _as_points(x, self.k)
        inside = self.ambient.contains(x)
        if self.kind in ("point_interior", "point_boundary"):
            d = np.linalg.norm(x - np.array(self.x0), axis=1)
            return inside & (d < 1.0 / n)
        if self.kind == "at_infinity":
            if self.side == "+":
                return inside & (x[:, 0] > n)
            if self.side == "-":
                return inside & (x[:, 0] < -n)
            return inside & (np.linalg.norm(x, axis=1) > n)
        return inside & (self.ambient.boundary_distance(x) < 1.0 / n)

    def separation(self, n):
        """Closed-form d(O_{n+1}, complement of O_n in the ambient set)."""
        if self.kind == "at_infinity":
            return 1.0
        return 1.0 / n - 1.0 / (n + 1)

    def anchor(self):
        """A point around which sampling concentrates half of its x values."""
        if self.x0 is not None:
            return np.array(self.x0, dtype=float)
        return np.zeros(self.k)

    def first_disjoint_index(self, lo, hi, n_min=2, n_max=10_000):
        """Smallest n >= n_min with O_n disjoint from the interval [lo, hi] (k = 1)."""
        if self.k != 1:
            raise DomainError("interval disjointness is only available for k = 1")
        for n in range(n_min, n_max + 1):
            if self._disjoint(lo, hi, n):
                return n
        raise DomainError(f"no O_n with n <= {n_max} avoids [{lo}, {hi}]")

    def _disjoint(self, lo, hi, n):
        a_lo, a_hi = self.ambient.lower[0], self.ambient.upper[0]
        lo, hi = max(lo, a_lo), min(hi, a_hi)
        if lo > hi:
            return True
        if self.kind in ("point_interior", "point_boundary"):
            c = self.x0[0]
            gap = max(lo - c, c - hi, 0.0)
            return gap >= 1.0 / n
        if self.kind == "at_infinity":
            if self.side == "+":
                return hi <= n
            if self.side == "-":
                return lo >= -n
            return -n <= lo and hi <= n
        # near_boundary: O_n hugs each finite bound within 1/n
        ok = True
        if math.isfinite(a_lo):
            ok &= lo >= a_lo + 1.0 / n
        if math.isfinite(a_hi):
            ok &= hi <= a_hi - 1.0 / n
        return bool(ok)

    def to_dict(self):
        return {"kind": self.kind, "ambient": self.ambient.to_dict(),
                "x0": None if self.x0 is None else list(self.x0), "side": self.side}

    @classmethod
    def from_dict(cls, d):
        params = {k: v for k, v in d.items() if k != "kind"}
        if "ambient" in params and isinstance(params["ambient"], dict):
            params["ambient"] = Ambient.from_dict(params["ambient"])
        return make_family(d["kind"], **params)


def make_family(kind, ambient=None, x0=None, side="both"):
    """Build and validate a shrinking family.

    >>> make_family("at_infinity").in_O(5.0, 3)
    array([ True])
    """
    if kind not in FAMILY_KINDS:
        raise DomainError(f"unknown family kind {kind!r}; expected one of {FAMILY_KINDS}")
    if ambient is None:
        ambient = Ambient.real_space(1 if x0 is None else len(np.atleast_1d(x0)))
    if x0 is not None:
        x0 = tuple(float(v) for v in np.atleast_1d(x0))
        if len(x0) != ambient.k:
            raise DomainError("x0 dimension does not match the ambient set")
    if side not in ("both", "+", "-"):
        raise DomainError(f"side must be 'both', '+' or '-', got {side!r}")
    if kind in ("point_interior", "point_boundary"):
        if x0 is None:
            raise DomainError(f"{kind} family requires a base point x0")
        if not ambient.closure_contains(x0)[0]:
            raise DomainError(f"x0={x0} lies outside the closure of the ambient set")
        interior = bool(ambient.contains(x0)[0])
        if kind == "point_interior" and not interior:
            raise DomainError(f"x0={x0} is not an interior point")
        if kind == "point_boundary" and interior:
            raise DomainError(f"x0={x0} is not a boundary point")
    elif kind == "at_infinity":
        dirs = ambient.unbounded_directions()
        if not dirs:
            raise DomainError("at_infinity family needs an unbounded ambient set")
        if side != "both":
            if ambient.k != 1:
                raise DomainError("one-sided at_infinity families are one-dimensional")
            if (0, 1 if side == "+" else -1) not in dirs:
                raise DomainError(f"ambient set is bounded on the {side} side")
        x0 = None
    else:
        if not ambient.has_boundary:
            raise DomainError("near_boundary family needs an ambient set with boundary")
        x0 = None
    if kind != "at_infinity":
        side = "both"
    return ShrinkingFamily(kind, ambient, x0, side)


def in_exhaustion(ambient, x, r):
    """Membership in K_r = {|x| <= r, d(x, boundary) >= 1/r} inside the ambient set."""
    x = _as_points(x, ambient.k)
    ok = ambient.contains(x) & (np.linalg.norm(x, axis=1) <= r)
    if ambient.has_boundary:
        ok &= ambient.boundary_distance(x) >= 1.0 / r
    return ok


def shell_index(ambient, x):
    """Smallest integer r >= 1 with x in K_r."""
    x = _as_points(x, ambient.k)
    r = np.maximum(np.ceil(np.linalg.norm(x, axis=1)), 1.0)
    if ambient.has_boundary:
        d = ambient.boundary_distance(x)
        with np.errstate(divide="ignore"):
            r = np.maximum(r, np.ceil(1.0 / d))
    return r.astype(int)


@dataclass(frozen=True)
class SectorDomain:
    """V_n = A_n u B_n for a given shrinking family."""

    n: int
    family: ShrinkingFamily

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"sector index must be a positive integer, got {self.n}")

    @property
    def k(self):
        return self.family.k

    def contains(self, x, y, zeta):
        """Return (member, branch) for a single point; branch is 'A', 'B' or None."""
        mask, branch = self.contains_many(np.atleast_1d(x)[None, :] if self.k > 1 else [x],
                                          np.atleast_1d(y)[None, :] if self.k > 1 else [y],
                                          [zeta])
        return bool(mask[0]), (str(branch[0]) or None)

    def contains_many(self, x, y, zeta):
        n = self.n
        x = _as_points(x, self.k)
        y = _as_points(y, self.k)
        zeta = np.asarray(zeta, dtype=complex).reshape(-1)
        rho = np.abs(zeta)
        inside = self.family.ambient.contains(x)
        small = (rho > 0) & (rho < 1.0 / n)
        in_b = self.family.in_O(x, n) & small & np.all(np.abs(y) < 1.0 / n, axis=1)
        in_a = (inside & ~self.family.in_O(x, n + 1) & small
                & (np.abs(np.angle(zeta)) < 1.0 / n)
                & np.all(np.abs(y) < (rho / n)[:, None], axis=1))
        branch = np.where(in_b, "B", np.where(in_a, "A", ""))
        return in_b | in_a, branch


@dataclass(frozen=True)
class SampleGrid:
    """A finite set of points (z, zeta) of some V_n with provenance."""

    x: np.ndarray
    y: np.ndarray
    zeta: np.ndarray
    branch: np.ndarray
    provenance: dict

    def __len__(self):
        return len(self.zeta)

    @property
    def z(self):
        return self.x + 1j * self.y

    @property
    def n(self):
        return self.provenance["n"]

    def subset(self, mask, note=None):
        prov = dict(self.provenance)
        if note:
            prov["subset"] = note
        return SampleGrid(self.x[mask], self.y[mask], self.zeta[mask], self.branch[mask], prov)

    def point(self, i):
        return {"x": self.x[i].tolist(), "y": self.y[i].tolist(),
                "zeta": [float(self.zeta[i].real), float(self.zeta[i].imag)]}

    def to_dict(self):
        return {
            "provenance": self.provenance,
            "x": self.x.tolist(), "y": self.y.tolist(),
            "zeta_re": self.zeta.real.tolist(), "zeta_im": self.zeta.imag.tolist(),
            "branch": self.branch.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d):
        zeta = np.array(d["zeta_re"]) + 1j * np.array(d["zeta_im"])
        return cls(np.array(d["x"], dtype=float), np.array(d["y"], dtype=float), zeta,
                   np.array(d["branch"]), d["provenance"])


def _edge_map(u):
    """(0,1) -> (-1,1), denser near the ends where sup-norms tend to live."""
    return np.sin(np.pi * (u - 0.5)) * (1.0 - _EDGE)


def default_radius(V):
    fam = V.family
    amb = fam.ambient
    finite = [abs(b) for b in amb.lower + amb.upper if math.isfinite(b)]
    extent = max(finite, default=0.0)
    base = float(np.linalg.norm(fam.anchor()))
    return float(2 * V.n + 4 + math.ceil(extent + base))


def _sample_x(V, u_x, u_mode, radius):
    amb = V.family.ambient
    k = amb.k
    lo = np.maximum(np.array(amb.lower) + 1.0 / radius, -radius)
    hi = np.minimum(np.array(amb.upper) - 1.0 / radius, radius)
    if np.any(lo >= hi):
        raise SamplingError(f"exhaustion set K_{radius:g} is empty for {amb}")
    x = lo + u_x * (hi - lo)
    if k == 1:
        # half of the points sit log-uniformly around the family anchor
        anchor = V.family.anchor()[0]
        focus = u_mode < 0.5
        sign = np.where(u_mode < 0.25, -1.0, 1.0)
        logr = -3.0 + u_x[:, 0] * (math.log10(radius) + 3.0)
        xf = anchor + sign * 10.0 ** logr
        ok = focus & (xf > lo[0]) & (xf < hi[0])
        x[ok, 0] = xf[ok]
    return x


def sample(V, budget, zeta_floor=1e-8, seed=0, per_decade=40, radius=None):
    """Deterministic sample of V_n.

    |zeta| is placed on log-spaced levels in [zeta_floor, 1/n) (the first two
    points sit on the top level and on the floor), arg zeta and y are spread
    over the branch bounds, x is drawn from the exhaustion set K_radius.
    """
    n = V.n
    if budget is None or int(budget) < 1:
        raise SamplingError(f"budget must be >= 1, got {budget}")
    budget = int(budget)
    if not (0 < zeta_floor < 1.0 / n):
        raise SamplingError(f"zeta_floor must lie in (0, 1/n) = (0, {1.0 / n:g})")
    radius = float(radius) if radius is not None else default_radius(V)
    k = V.k
    top = (1.0 / n) * (1.0 - _EDGE)
    decades = math.log10(top / zeta_floor)
    n_levels = max(2, int(math.ceil(decades * per_decade)) + 1)
    levels = np.logspace(math.log10(zeta_floor), math.log10(top), n_levels)
    # rho * exp(i theta) may lose an ulp in modulus
    levels[0] = zeta_floor * (1 + 1e-12)

    dim = 5 + 2 * k
    engine = qmc.Halton(d=dim, scramble=True, seed=np.random.default_rng(seed))
    xs, ys, zs, brs = [], [], [], []
    have = 0
    drawn = 0
    while have < budget:
        batch = max(2 * (budget - have), 64)
        u = engine.random(batch)
        u = np.clip(u, 1e-12, 1 - 1e-12)
        idx = np.floor(u[:, 0] * n_levels).astype(int).clip(0, n_levels - 1)
        if drawn == 0:
            idx[0] = n_levels - 1
            if batch > 1:
                idx[1] = 0
        idx = np.where(u[:, 4 + 2 * k] < 0.3, n_levels - 1, idx)
        rho = levels[idx]
        x = _sample_x(V, u[:, 3 + k:3 + 2 * k], u[:, 2], radius)
        keep = in_exhaustion(V.family.ambient, x, radius)
        in_b = V.family.in_O(x, n)
        v_ang = _edge_map(u[:, 1])
        v_y = _edge_map(u[:, 3:3 + k])
        # moduli of holomorphic functions peak on the boundary: pin a share
        # of the points to the arg/y edges and to their corners
        u_edge = u[:, 3 + 2 * k]
        edge_ang = (u_edge < 0.4) & ~in_b
        edge_y = ((u_edge < 0.25) | ((u_edge >= 0.4) & (u_edge < 0.55)))
        v_ang = np.where(edge_ang, np.sign(v_ang) * (1.0 - _EDGE), v_ang)
        v_y = np.where(edge_y[:, None], np.sign(v_y) * (1.0 - _EDGE), v_y)
        theta = np.where(in_b, np.pi * v_ang, (1.0 / n) * v_ang)
        ymax = np.where(in_b, 1.0 / n, rho / n)
        y = v_y * ymax[:, None]
        zeta = rho * np.exp(1j * theta)
        keep = np.flatnonzero(keep)[: budget - have]
        xs.append(x[keep]), ys.append(y[keep]), zs.append(zeta[keep])
        brs.append(np.where(in_b[keep], "B", "A"))
        have += len(keep)
        drawn += batch
        if drawn > 64 * budget + 4096:
            raise SamplingError("could not place the requested budget inside K_r")
    x, y, zeta = np.concatenate(xs), np.concatenate(ys), np.concatenate(zs)
    branch = np.concatenate(brs)
    mask, _ = V.contains_many(x, y, zeta)
    if not np.all(mask):
        bad = int(np.flatnonzero(~mask)[0])
        raise SamplingError(f"sampler produced a point outside V_{n}: index {bad}")
    prov = {"n": n, "family": V.family.to_dict(), "budget": budget,
            "zeta_floor": zeta_floor, "seed": seed, "per_decade": per_decade,
            "radius": radius, "strategy": "halton-loglevels-edges-v2"}
    return SampleGrid(x, y, zeta, branch, prov)


def refine(V, grid):
    """Superset of ``grid``: doubled density, floor lowered by one decade."""
    p = grid.provenance
    floor = p.get("zeta_floor", 1e-8) / 10.0
    extra = sample(V, 2 * len(grid), zeta_floor=floor, seed=p.get("seed", 0) + 1,
                   per_decade=2 * p.get("per_decade", 40), radius=p.get("radius"))
    prov = dict(p)
    prov["refined"] = {"extra_budget": len(extra), "zeta_floor": floor,
                       "per_decade": extra.provenance["per_decade"]}
    return SampleGrid(np.concatenate([grid.x, extra.x]), np.concatenate([grid.y, extra.y]),
                      np.concatenate([grid.zeta, extra.zeta]),
                      np.concatenate([grid.branch, extra.branch]), prov)


def focus(V, grid, features, share=0.25, seed=0):
    """Superset of ``grid`` with extra points at x = c + s|zeta| around each feature c.

    Point singularities of width |zeta| are invisible to x-samples drawn at
    fixed scales; these points keep the (y, zeta) geometry of existing samples.
    """
    feats = [float(c) for c in features]
    if not feats or V.k != 1 or len(grid) == 0:
        return grid
    rng = np.random.default_rng(seed)
    m = max(1, int(share * len(grid) / len(feats)))
    xs, ys, zs, brs = [grid.x], [grid.y], [grid.zeta], [grid.branch]
    for c in feats:
        pick = rng.integers(0, len(grid), m)
        zeta = grid.zeta[pick]
        s = rng.uniform(-3.0, 3.0, m)
        s[: max(1, m // 4)] = 0.0
        x = (c + s * np.abs(zeta))[:, None]
        y = grid.y[pick]
        ok, branch = V.contains_many(x, y, zeta)
        xs.append(x[ok]), ys.append(y[ok]), zs.append(zeta[ok]), brs.append(branch[ok])
    prov = dict(grid.provenance)
    prov["focus"] = {"features": feats, "share": share}
    return SampleGrid(np.concatenate(xs), np.concatenate(ys), np.concatenate(zs),
                      np.concatenate(brs), prov)


def polish(V, grid, idx, pins=()):
    """Boundary variants of the grid points ``idx``: y and arg zeta moved to their
    edges, |zeta| moved to the top level, x moved onto each pin. Only points of V_n
    are kept."""
    n = V.n
    idx = np.asarray(idx, dtype=int)
    if len(idx) == 0 or V.k != 1:
        return grid.subset(np.zeros(len(grid), bool))
    x0, y0, z0 = grid.x[idx, 0], grid.y[idx, 0], grid.zeta[idx]
    rho, th = np.abs(z0), np.angle(z0)
    top = (1.0 / n) * (1.0 - _EDGE)
    xs = [x0] + [np.full_like(x0, float(p)) for p in pins]
    xs_, ys_, zs_ = [], [], []
    for x in xs:
        in_b = V.family.in_O(x[:, None], n)
        for r in (rho, np.full_like(rho, top)):
            thmax = np.where(in_b, np.pi, 1.0 / n) * (1.0 - _EDGE)
            ymax = np.where(in_b, 1.0 / n, r / n) * (1.0 - _EDGE)
            for t in (th, thmax, -thmax):
                for y in (np.clip(y0, -ymax, ymax), ymax, -ymax):
                    xs_.append(x), ys_.append(y), zs_.append(r * np.exp(1j * t))
    x = np.concatenate(xs_)[:, None]
    y = np.concatenate(ys_)[:, None]
    zeta = np.concatenate(zs_)
    ok, branch = V.contains_many(x, y, zeta)
    prov = dict(grid.provenance, polished=len(idx))
    return SampleGrid(x[ok], y[ok], zeta[ok], branch[ok], prov)


def sample_sector(n, budget, zeta_floor=1e-8, seed=0, per_decade=40):
    """zeta samples of the sector |arg zeta| < 1/n, 0 < |zeta| < 1/n."""
    if budget < 1:
        raise SamplingError("budget must be >= 1")
    top = (1.0 / n) * (1.0 - _EDGE)
    n_levels = max(2, int(math.ceil(math.log10(top / zeta_floor) * per_decade)) + 1)
    levels = np.logspace(math.log10(zeta_floor), math.log10(top), n_levels)
    levels[0] = zeta_floor * (1 + 1e-12)
    engine = qmc.Halton(d=2, scramble=True, seed=np.random.default_rng(seed))
    u = np.clip(engine.random(budget), 1e-12, 1 - 1e-12)
    idx = np.floor(u[:, 0] * n_levels).astype(int).clip(0, n_levels - 1)
    idx[0] = n_levels - 1
    if budget > 1:
        idx[1] = 0
    theta = (1.0 / n) * _edge_map(u[:, 1])
    # the real ray and the sector edges are always probed on every level
    rays = np.concatenate([[0.0], (1.0 / n) * (1 - _EDGE) * np.array([-1.0, 1.0])])
    grid_ray = (levels[:, None] * np.exp(1j * rays[None, :])).ravel()
    return np.concatenate([levels[idx] * np.exp(1j * theta), grid_ray])


@dataclass(frozen=True)
class CompactSet:
    """A closed box K inside the ambient set, sampled on a regular grid."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or any(a > b for a, b in zip(lo, hi)):
            raise DomainError(f"bad compact box {lo} x {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def k(self):
        return len(self.lower)

    def points(self, m=201, extra=()):
        """Regular grid with m points per axis plus ``extra`` points lying in K."""
        axes = [np.linspace(a, b, m if b > a else 1) for a, b in zip(self.lower, self.upper)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.k)
        extra = [np.atleast_1d(np.asarray(e, dtype=float)) for e in extra]
        extra = [e for e in extra if e.shape == (self.k,)
                 and all(a <= v <= b for v, a, b in zip(e, self.lower, self.upper))]
        if extra:
            mesh = np.concatenate([mesh, np.array(extra)])
        return mesh

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}
