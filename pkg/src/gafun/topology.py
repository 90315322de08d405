"""Sharp neighborhoods, bounded sets, space chains, the psi-construction and l1 hulls."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import expr as E
from .algebra import (Representative, SpaceIndex, WeightFunction, differentiate, evaluate_grid,
                      mul, norm_estimate, sup_on_compact, tail_slope, weighted_values, add, scale,
                      SLOPE_TOL, MIN_FIT_POINTS, MAX_SHELLS)
from .domains import CompactSet, SectorDomain, sample, shell_index
from .errors import FitError, PreconditionError, WeightFormError

DEFAULT_EPS = (1e-1, 1e-2, 1e-3, 1e-4)
SAFETY = 1.0 + 1e-12
HULL_TOL = 1e-12


# -- sharp topology ------------------------------------------------------------------

@dataclass(frozen=True)
class SharpNeighborhood:
    """V(K, p, q): sup_K |D^p R(x, xi)| <= C xi^q for small xi."""

    K: CompactSet
    p: int = 0
    q: int = 1

    def __post_init__(self):
        if self.p < 0 or int(self.p) != self.p or int(self.q) != self.q:
            raise PreconditionError("derivative order p >= 0 and integer q required")


@dataclass(frozen=True)
class SharpVerdict:
    member: bool
    C: Optional[float]
    eta: Optional[float]
    slope: float

    def to_dict(self):
        return {"member": self.member, "C": self.C, "eta": self.eta, "slope": self.slope}


def sharp_membership(f, V, xi, extra=()):
    """Fit sup_K |D^p f(x, xi)| against C xi^q over the grid tail."""
    xi = np.sort(np.asarray(xi, dtype=float))[::-1]
    if len(xi) < MIN_FIT_POINTS:
        raise FitError(f"sharp fit needs at least {MIN_FIT_POINTS} xi values")
    g = f
    for _ in range(V.p):
        g = differentiate(g)
    S = sup_on_compact(g, V.K, xi, extra or f.features)
    slope = tail_slope(xi, S)
    if slope == math.inf:
        return SharpVerdict(True, 0.0, float(xi[0]), slope)
    if not math.isfinite(slope) or slope < V.q - SLOPE_TOL:
        return SharpVerdict(False, None, None, slope)
    tail = slice(len(xi) - MIN_FIT_POINTS, None)
    C = float(np.max(S[tail] * xi[tail] ** (-float(V.q))))
    return SharpVerdict(True, C, float(xi[tail][0]), slope)


# -- chains and boundedness ------------------------------------------------------------

@dataclass(frozen=True)
class SpaceChain:
    spaces: tuple

    def __len__(self):
        return len(self.spaces)

    def __getitem__(self, i):
        return self.spaces[i]

    @property
    def indices(self):
        return [s.n for s in self.spaces]

    def to_dict(self):
        return {"spaces": [s.to_dict() for s in self.spaces]}


def psi_growth_shells(eps=DEFAULT_EPS, shells=None):
    """1/eps_{min(r, M)} for r = 1..R: the proof-mode psi growth relative to phi."""
    R = len(eps) if shells is None else shells
    return tuple(1.0 / eps[min(r, len(eps)) - 1] for r in range(1, R + 1))


def next_weight(phi, n, eps=DEFAULT_EPS):
    """max(phi, 1)^2 * (n + 1)/min(d, 1) * psi-growth.

    The max with 1 keeps the next weight above both phi^2 and the derivative weight.
    """
    base = phi.dominating_max(WeightFunction.constant(1.0))
    growth = WeightFunction(shells=psi_growth_shells(eps))
    return base.times(base).times(WeightFunction(c=float(n + 1), blowup=1)).times(growth)


def chain_spaces(base, steps, eps=DEFAULT_EPS):
    if steps < 1:
        raise PreconditionError("a chain needs at least one step")
    spaces = [base]
    for _ in range(steps):
        s = spaces[-1]
        try:
            w = next_weight(s.weight, s.n, eps)
        except WeightFormError as err:
            raise WeightFormError(f"chain weight leaves the catalog after {len(spaces)} "
                                  f"steps: {err}") from err
        spaces.append(SpaceIndex(2 * s.n + 1, w, s.family))
    return SpaceChain(tuple(spaces))


@dataclass
class ChainReport:
    chain: SpaceChain
    entry: dict = field(default_factory=dict)
    product: list = field(default_factory=list)
    derivative: list = field(default_factory=list)
    stability: list = field(default_factory=list)
    weights: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c["passed"] for c in self.product + self.derivative + self.stability +
                   self.weights) and all(v is not None for v in self.entry.values())

    def to_dict(self):
        return {"chain": self.chain.to_dict(), "indices": self.chain.indices,
                "entry": self.entry, "product": self.product, "derivative": self.derivative,
                "stability": self.stability, "weights": self.weights, "passed": self.passed}


def _claim_ok(f, s):
    # a claimed space index is a lower bound; sampling cannot certify below it
    return f.space is None or f.space.n <= s.n


def _grid(space, budget, seed, floor=1e-8):
    return sample(SectorDomain(space.n, space.family), budget, floor, seed)


def build_chain(base, steps, corpus=None, eps=DEFAULT_EPS, budget=2000, seed=0, pairs=None):
    """n_{p+1} = 2 n_p + 1 and the weight recursion; certificates on an optional corpus.

    ``corpus`` maps labels to Representatives. Each element enters the chain at
    the first level at or above its claimed index whose norm estimate is finite
    and stable; certificates are checked from that level on.
    """
    chain = chain_spaces(base, steps, eps)
    report = ChainReport(chain)
    if not corpus:
        return report
    grids = [_grid(s, budget, seed + i) for i, s in enumerate(chain)]
    names = list(corpus)
    est = {}
    for name in names:
        report.entry[name] = None
        for p, s in enumerate(chain):
            c = norm_estimate(corpus[name], s, grids[p])
            est[name, p] = c
            if (report.entry[name] is None and _claim_ok(corpus[name], s) and c.stable
                    and math.isfinite(c.estimate)):
                report.entry[name] = p
            if report.entry[name] is not None:
                report.stability.append({"element": name, "level": p, "n": s.n,
                                         "estimate": c.estimate, "passed": c.stable})
    for p in range(len(chain) - 1):
        s, t = chain[p], chain[p + 1]
        x = grids[p + 1].x
        amb = s.family.ambient
        phi, phi_next = s.weight(x, amb), t.weight(x, amb)
        psi = s.weight.derivative(s.n)(x, amb)
        report.weights.append({"level": p, "square": bool(np.all(phi_next >= phi ** 2 * (1 - 1e-12))),
                               "derivative": bool(np.all(phi_next >= psi * (1 - 1e-12))),
                               "passed": bool(np.all(phi_next >= phi ** 2 * (1 - 1e-12))
                                              and np.all(phi_next >= psi * (1 - 1e-12)))})
        live = [nm for nm in names if report.entry[nm] is not None and report.entry[nm] <= p]
        cand = pairs if pairs is not None else list(itertools.combinations_with_replacement(live, 2))
        G = grids[p + 1]
        for a, b in cand:
            if a not in live or b not in live:
                continue
            fa, fb = corpus[a], corpus[b]
            lhs = float(np.max(weighted_values(mul(fa, fb), t, G)))
            rhs = float(np.max(weighted_values(fa, s, G)) * np.max(weighted_values(fb, s, G)))
            report.product.append({"pair": [a, b], "level": p, "lhs": lhs, "rhs": rhs,
                                   "passed": bool(lhs <= rhs * (1 + 1e-12))})
        for nm in live:
            c = norm_estimate(differentiate(corpus[nm]), t, G)
            report.derivative.append({"element": nm, "level": p, "n": t.n, "estimate": c.estimate,
                                      "passed": bool(c.stable and math.isfinite(c.estimate))})
    return report


@dataclass(frozen=True)
class BoundedResult:
    level: int
    n: int
    bound: float

    def to_dict(self):
        return {"level": self.level, "n": self.n, "bound": self.bound}


def bounded_in(chain, fs, budget=2000, seed=0):
    """Smallest level p where every f in ``fs`` has a finite, stable norm estimate.

    Levels below an element's claimed space index are skipped.
    """
    for p, s in enumerate(chain):
        g = _grid(s, budget, seed + p)
        worst = 0.0
        ok = True
        for f in fs:
            if not _claim_ok(f, s):
                ok = False
                break
            c = norm_estimate(f, s, g)
            if not (c.stable and math.isfinite(c.estimate)):
                ok = False
                break
            worst = max(worst, c.estimate)
        if ok:
            return BoundedResult(p, s.n, worst)
    return None


# -- psi construction -------------------------------------------------------------------

@dataclass
class PsiCertificate:
    n: int
    weight: WeightFunction
    psi: WeightFunction
    eps: tuple
    q0: dict
    q0_grid: dict
    mu: list
    nu_history: list
    verified: bool
    violations: int
    mode: str
    provenance: dict

    @property
    def nu(self):
        return list(self.psi.shells)

    def to_dict(self):
        return {"n": self.n, "weight": self.weight.to_dict(), "psi": self.psi.to_dict(),
                "eps": list(self.eps), "q0": {f"{e:g}": q for e, q in self.q0.items()},
                "q0_grid": {f"{e:g}": q for e, q in self.q0_grid.items()},
                "mu": self.mu, "nu_history": self.nu_history, "verified": self.verified,
                "violations": self.violations, "mode": self.mode, "grid": self.provenance}

    def q0_rows(self):
        return [(e, self.q0[e], self.q0_grid[e]) for e in self.eps]

    def nu_rows(self):
        return [(r + 1, v) for r, v in enumerate(self.psi.shells)]


def _check_unit_ball(fs, space, budget, seed):
    g = _grid(space, budget, seed)
    bad = []
    for q, f in enumerate(fs, start=1):
        e = float(np.max(weighted_values(f, space, g)))
        if not e <= 1.0 + 1e-9:
            bad.append((q, e))
    if bad:
        q, e = bad[0]
        raise PreconditionError(f"sequence element {q} has norm estimate {e:.6g} > 1 in "
                                f"H_{{{space.n},phi}}: the sequence is not in the unit ball")


def _first_tail_pass(ok):
    """Smallest 1-based q with ok[q'] True for every q' >= q, or None."""
    if not ok[-1]:
        return None
    q = len(ok)
    while q > 1 and ok[q - 2]:
        q -= 1
    return q


def construct_psi(n, weight, family, fs, f_limit, eps=DEFAULT_EPS, budget=10_000, seed=0,
                  mode="sampled", zeta_floor=1e-8, check_premise=True):
    """Diagonal nu_r construction on the exhaustion shells.

    Step m (eps_m): shells r < m are frozen; shells r >= m are raised to mu_r,
    where mu_r = max over grid points in K_r and all q of |f_q - f| |zeta|^(n+1) / eps
    ("sampled") or |phi|_{K_r}/eps ("proof").

    q0(eps) comes from the uniform-convergence stage: the first index whose tail
    satisfies |f_q - f| / phi <= eps (n+1)^(n+1) on grid points with |zeta| >= eps/2.
    q0_grid(eps) is the first index whose tail passes |f_q - f| |zeta|^(n+1) <= eps nu_r
    on the shells frozen before step m. The final psi is checked against
    |f_q - f| <= eps psi / |zeta|^(n+1) at every grid point for q >= q0(eps).
    """
    if mode not in ("sampled", "proof"):
        raise PreconditionError(f"unknown psi mode {mode!r}")
    eps = tuple(float(e) for e in eps)
    if any(b >= a for a, b in zip(eps, eps[1:])) or any(e <= 0 for e in eps):
        raise PreconditionError("eps schedule must be positive and strictly decreasing")
    space = SpaceIndex(n, weight, family)
    if check_premise:
        _check_unit_ball(fs, space, max(budget // 4, 500), seed + 101)
    G = sample(SectorDomain(n + 1, family), budget, zeta_floor, seed)
    amb = family.ambient
    r_pt = np.minimum(shell_index(amb, G.x), MAX_SHELLS)
    R = int(r_pt.max())
    rho = np.abs(G.zeta)
    fl = evaluate_grid(f_limit, G)
    D = np.empty((len(fs), len(G)))
    with np.errstate(all="ignore"):
        for q, f in enumerate(fs):
            D[q] = np.abs(evaluate_grid(f, G) - fl) * rho ** (n + 1)
    if not np.all(np.isfinite(D)):
        raise PreconditionError("sequence values are not finite on the V_{n+1} grid")
    floor = np.array([weight.sup_on(r) for r in range(1, R + 1)])
    nu = floor.copy()
    phi_x = weight(G.x, amb)
    margin = float(n + 1) ** (n + 1)
    q0, q0g, mus, hist = {}, {}, [], []
    Dmax = D.max(axis=0)
    for m, e in enumerate(eps, start=1):
        frozen = r_pt < m
        if frozen.any():
            ok = np.all(D[:, frozen] <= e * nu[r_pt[frozen] - 1] * SAFETY, axis=1)
            q0g[e] = _first_tail_pass(ok)
        else:
            q0g[e] = 1
        # uniform-convergence stage on K' = {|zeta| >= eps/2}, margin (n+1)^(n+1)
        kp = rho >= e / 2
        if kp.any():
            with np.errstate(all="ignore"):
                U = np.abs(D[:, kp] / rho[kp] ** (n + 1)) / phi_x[kp] / margin
            q0[e] = _first_tail_pass(np.all(U <= e * SAFETY, axis=1))
        else:
            q0[e] = 1
        if mode == "sampled":
            per_shell = np.zeros(R)
            np.maximum.at(per_shell, r_pt - 1, Dmax)
            mu = np.maximum.accumulate(per_shell) / e
        else:
            mu = floor / e
        mus.append(mu.tolist())
        raise_ = np.arange(1, R + 1) >= m
        nu = np.where(raise_, np.maximum(nu, mu * SAFETY), nu)
        hist.append(nu.tolist())
    psi = WeightFunction(shells=tuple(nu))
    psi_x = psi(G.x, amb)
    violations = 0
    for e in eps:
        if q0[e] is None:
            violations += 1
            continue
        tail = D[q0[e] - 1:]
        violations += int(np.sum(tail > e * psi_x[None, :] * SAFETY))
    prov = dict(G.provenance, size=len(G), shells=R)
    return PsiCertificate(n, weight, psi, eps, q0, q0g, mus, hist, violations == 0, violations,
                          mode, prov)


@dataclass
class ExtractionReport:
    bounded: bool
    subsequence: list
    limit: str
    distances: list
    certificate: Optional[PsiCertificate]

    def to_dict(self):
        return {"bounded": self.bounded, "subsequence": self.subsequence, "limit": self.limit,
                "distances": self.distances,
                "certificate": None if self.certificate is None else self.certificate.to_dict()}


def verify_compact_extraction(fs, n, weight, family, probes=None, f_limit=None,
                              eps=DEFAULT_EPS, budget=4000, seed=0):
    """Boundedness on probe compacts, greedy Cauchy subsequence, then construct_psi."""
    space = SpaceIndex(n, weight, family)
    _check_unit_ball(fs, space, budget, seed + 7)
    probes = probes or [CompactSet((-1.0,) * family.k, (1.0,) * family.k)]
    G = _grid(space, budget, seed + 11)
    lo, hi = np.array(probes[0].lower), np.array(probes[0].upper)
    inK = np.all((G.x >= lo) & (G.x <= hi), axis=1)
    phi = weight(G.x, family.ambient)
    vals = [evaluate_grid(f, G) for f in fs]
    bounded = True
    for K in probes:
        m = np.all((G.x >= np.array(K.lower)) & (G.x <= np.array(K.upper)), axis=1)
        for v in vals:
            if np.any(np.abs(v[m]) * np.abs(G.zeta[m]) ** n > phi[m] * (1 + 1e-9)):
                bounded = False
    w = np.abs(G.zeta[inK]) ** n / phi[inK]
    W = [v[inK] * w for v in vals]
    keep, dists, last = [0], [], math.inf
    for q in range(1, len(fs)):
        d = float(np.max(np.abs(W[q] - W[keep[-1]]))) if inK.any() else 0.0
        if d <= 0.5 * last * (1 + 1e-9) or d == 0.0:
            keep.append(q)
            dists.append(d)
            last = d
    if len(keep) < 2:
        raise PreconditionError("no Cauchy subsequence found within the given sequence")
    sub = [fs[i] for i in keep]
    if f_limit is None:
        d_last = dists[-1]
        ratio = dists[-1] / dists[-2] if len(dists) > 1 and dists[-2] > 0 else 0.0
        tail = d_last * ratio / (1 - ratio) if ratio < 1 else math.inf
        top = float(np.max(np.abs(W[keep[-1]]))) if inK.any() else 0.0
        if d_last == 0.0:
            f_limit, label = sub[-1], "last element (sequence is eventually constant)"
        elif top <= 2 * tail + 1e-12:
            f_limit, label = Representative(E.ZERO, space, "0"), "0"
        else:
            raise PreconditionError("cannot identify the limit; supply f_limit")
    else:
        label = str(f_limit)
    cert = construct_psi(n, weight, family, sub, f_limit, eps, budget, seed, check_premise=False)
    return ExtractionReport(bounded, keep, label, dists, cert)


# -- l1 hulls ------------------------------------------------------------------------------

@dataclass(frozen=True)
class L1Hull:
    """Finite truncation of {sum lam_n x_n : sum |lam_n| <= 1}."""

    generators: tuple
    labels: tuple = ()

    def __len__(self):
        return len(self.generators)


def hull(generators, labels=None):
    gens = tuple(generators)
    labels = tuple(labels) if labels is not None else tuple(f"x{i + 1}" for i in range(len(gens)))
    return L1Hull(gens, labels)


def square_order(m, k):
    """Enumerate index pairs (i, j) of an m x k array by max(i, j), then i, then j."""
    return sorted(itertools.product(range(m), range(k)), key=lambda ij: (max(ij), ij[0], ij[1]))


def _product(a, b):
    if isinstance(a, Representative):
        return mul(a, b)
    from .diagnostics import GeneralizedNumber, gn_mul
    if isinstance(a, GeneralizedNumber):
        return gn_mul(a, b)
    return a * b


def hull_product(h1, h2):
    order = square_order(len(h1), len(h2))
    gens = tuple(_product(h1.generators[i], h2.generators[j]) for i, j in order)
    labels = tuple(f"{h1.labels[i]}*{h2.labels[j]}" for i, j in order)
    return L1Hull(gens, labels)


def product_weights(lam, mu):
    """Weights lam_i mu_j in square enumeration order."""
    lam, mu = [parse_weight(w) for w in lam], [parse_weight(w) for w in mu]
    return [lam[i] * mu[j] for i, j in square_order(len(lam), len(mu))]


def parse_weight(w):
    if isinstance(w, str):
        s = w.strip().replace(" ", "")
        if "j" in s or "i" in s:
            return complex(s.replace("i", "j"))
        return Fraction(s)
    return w


def weight_mass(weights):
    ws = [parse_weight(w) for w in weights]
    if all(isinstance(w, (int, Fraction)) for w in ws):
        return sum(abs(Fraction(w)) for w in ws)
    return math.fsum(abs(complex(w)) for w in ws)


def hull_member(h, weights):
    """True when the weights define an element of the hull (mass <= 1)."""
    if len(weights) > len(h):
        raise PreconditionError(f"{len(weights)} weights for {len(h)} generators")
    mass = weight_mass(weights)
    if isinstance(mass, Fraction):
        return mass <= 1
    return bool(mass <= 1 + HULL_TOL)


def hull_combination(h, weights):
    """sum lam_n x_n for the given weights."""
    ws = [parse_weight(w) for w in weights]
    terms = [(complex(w), g) for w, g in zip(ws, h.generators) if w != 0]
    if not terms:
        return 0
    first = terms[0][1]
    if isinstance(first, Representative):
        out = scale(terms[0][0], first)
        for w, g in terms[1:]:
            out = add(out, scale(w, g))
        return out
    from .diagnostics import GeneralizedNumber, gn_add
    if isinstance(first, GeneralizedNumber):
        out = GeneralizedNumber(lambda z, g=first, w=terms[0][0]: w * g(z), first.n)
        for w, g in terms[1:]:
            out = gn_add(out, GeneralizedNumber(lambda z, g=g, w=w: w * g(z), g.n))
        return out
    return sum(w * g for w, g in terms)
