"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary) and then asserts the same condition.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from gafun.algebra import (Representative, SpaceIndex, WeightFunction, evaluate,
                           moderateness_check, mul, negligibility_check, norm_estimate, scale, sub)
from gafun.diagnostics import (GeneralizedNumber, TestFunction, associate, gn_norm, laurent,
                               null_test)
from gafun.domains import CompactSet, SectorDomain, make_family, sample
from gafun.embedding import (ClassicalObject, bound_check, embed_analytic, embed_compact,
                             embed_constant_at_infinity, embed_delta, kernel_safety, mass_check,
                             sampled_kernel_sup)
from gafun.kernels import PiecewiseLinearDensity
from gafun.topology import SharpNeighborhood, build_chain, construct_psi, sharp_membership

PAIR_XI = 0.016 / 2.0 ** np.arange(12)
GAUSS = TestFunction.gaussian(0.0, 1.0)


def test_01_mollifier_normalization(acceptance, fam):
    g = sample(SectorDomain(5, fam), 400, seed=1)
    # unit mass holds where Re zeta > |Im z|; see the decisions ledger
    keep = np.flatnonzero(g.zeta.real > np.abs(g.y[:, 0]))[:20]
    assert len(keep) == 20
    m = mass_check(g.z[keep, 0], g.zeta[keep])
    err = float(np.max(np.abs(m - 1)))
    ok = acceptance(1, "mollifier normalization", err < 1e-8, f"max |mass - 1| = {err:.2e} < 1e-8")
    assert ok


def test_02_embedding_bound(acceptance, fam):
    tri = PiecewiseLinearDensity.triangle(0.0, 1.0)
    assert tri.l1_norm() == pytest.approx(1.0, abs=1e-15)
    f = embed_compact(ClassicalObject.compact(tri), fam)
    g = sample(SectorDomain(f.space.n, fam), 10_000, seed=2)
    sup, C = bound_check(f, g)
    kappa = f.bound["kappa"]
    K = sampled_kernel_sup(f, g)
    margin, alpha, safe = kernel_safety(f, g)
    ok = (sup <= C + 1e-9 and C <= tri.l1_norm() * kappa / math.pi * (1 + 1e-12)
          and K <= kappa and safe and len(g) == 10_000)
    acceptance(2, "embedding bound", ok,
               f"sampled sup |zeta||F| = {sup:.4f} <= C = {C:.4f}; C = int|f| kappa/pi with "
               f"sampled pi|zeta||K| = {K:.3f} <= kappa = {kappa:.3f}; min margin {margin:.3f} >= {alpha:.3f}")
    assert ok


def test_03_delta_association(acceptance, fam):
    r = associate(embed_delta(0.0, 0, fam), GAUSS, PAIR_XI)
    err = abs(r.limit - 1.0)
    ok = (not r.divergent) and err < 1e-6 and r.order >= 1 - 0.02
    acceptance(3, "delta association", ok,
               f"limit error {err:.2e} < 1e-6, order {r.order:.5f} >= 1 (tolerance 0.02)")
    assert ok


def test_04_delta_squared_divergence(acceptance, fam):
    d = embed_delta(0.0, 0, fam)
    xi = 5e-4 / 2.0 ** np.arange(12)
    r = associate(mul(d, d), GAUSS, xi)
    oracle = 1.0 / (2 * math.pi * xi)
    rel = float(np.max(np.abs(r.values - oracle) / oracle))
    ok = r.divergent and abs(r.order - 1.0) <= 0.02 and rel < 1e-6
    acceptance(4, "delta^2 divergence", ok,
               f"slope -{r.order:.5f} = -1 +- 0.02; max rel dev from 1/(2 pi xi) = {rel:.2e} < 1e-6")
    assert ok


def test_05_heaviside_times_delta(acceptance, fam_plus):
    H = embed_constant_at_infinity(ClassicalObject.heaviside(), fam_plus)
    d = embed_delta(0.0, 0, fam_plus)
    r = associate(mul(H, d), GAUSS, PAIR_XI)
    err = abs(r.limit - 0.5 * GAUSS(0.0))
    ok = (not r.divergent) and err < 1e-4
    acceptance(5, "H*delta ~ delta/2", ok, f"|L - phi(0)/2| = {err:.2e} < 1e-4")
    assert ok


def test_06_null_test(acceptance, fam):
    d = embed_delta(0.0, 0, fam)
    closed = Representative.from_text("zeta/(pi*(zeta^2 + z^2))")
    zero = null_test(sub(d, closed), [5.0], tol=1e-10, n=2, family=fam)
    amax = max(float(np.max(np.abs(s.coefficients))) for s in zero.series)
    pert = Representative.from_text("zeta/(pi*(zeta^2 + z^2)) + 0.001*zeta")
    nz = null_test(sub(d, pert), [5.0], tol=1e-10, n=2, family=fam)
    ok = zero.zero and amax < 1e-10 and (not nz.zero) and nz.witness["j"] == 1
    acceptance(6, "null test", ok,
               f"zero verdict with max |a_j| = {amax:.1e}; perturbed witness j = {nz.witness['j']}")
    assert ok


def test_07_laurent_oracle(acceptance, fam):
    s = laurent(embed_delta(0.0, 0, fam), 5.0)
    oracle = {1: 1 / (25 * math.pi), 3: -1 / (625 * math.pi), 5: 1 / (15625 * math.pi)}
    rel = {j: abs(s.coeff(j) - v) / abs(v) for j, v in oracle.items()}
    ok = max(rel.values()) < 1e-9
    acceptance(7, "Laurent oracle at x=5", ok,
               ", ".join(f"a_{j} rel {e:.1e}" for j, e in rel.items()) + " < 1e-9")
    assert ok


def _q0_oracle(eps, n=2):
    e = Fraction(1, round(1 / eps))
    p = 1
    while Fraction(1, n + 1) ** (n + 1 + p) > e:
        p += 1
    return p


def test_08_psi_construction(acceptance, fam):
    fs = [Representative.from_text(f"zeta^{p}") for p in range(1, 13)]
    c = construct_psi(2, WeightFunction(), fam, fs, Representative.constant(0.0), budget=10_000)
    oracle = {e: _q0_oracle(e) for e in c.eps}
    ok = c.q0 == oracle and c.verified and c.provenance["size"] == 10_000
    acceptance(8, "psi construction", ok,
               f"q0 = {[c.q0[e] for e in c.eps]} vs oracle {[oracle[e] for e in c.eps]}; "
               f"grid check at {c.provenance['size']} points, {c.violations} violations")
    assert ok


def test_09_sharp_converse(acceptance, fam):
    d = embed_delta(0.0, 0, fam)
    V = SharpNeighborhood(CompactSet((-1.0,), (1.0,)), 0, 1)
    xi = 0.1 / 2.0 ** np.arange(16)
    s = SpaceIndex(2, WeightFunction(), fam)
    g = sample(SectorDomain(2, fam), 2000, seed=9)
    base = norm_estimate(d, s, g).estimate
    fails, worst = True, 0.0
    for m in (1, 10, 100, 1_000, 10_000, 100_000, 1_000_000):
        f = scale(1.0 / m, d)
        fails &= not sharp_membership(f, V, xi).member
        worst = max(worst, abs(norm_estimate(f, s, g).estimate * m / base - 1))
    ok = fails and worst < 0.01
    acceptance(9, "sharp-topology converse", ok,
               f"(1/m) delta fails V(K,0,1) for m <= 1e6: {fails}; "
               f"max |m est_m / est_1 - 1| = {worst:.1e} < 1%")
    assert ok


def test_10_noninvertibility(acceptance):
    K = CompactSet((-1.0,), (1.0,))
    xi = np.geomspace(0.5, 0.04, 24)
    a = Representative.from_text("exp(-1/zeta^2)")
    neg = negligibility_check(a, K, xi, q_max=12)
    gn = gn_norm(GeneralizedNumber.from_expr("exp(-1/zeta^2)", 2), 2)
    mod = moderateness_check(Representative.from_text("exp(1/zeta^2)"), K, xi, N_max=12)
    ok = neg.passed and gn > 1e-6 and not mod.passed
    acceptance(10, "noninvertibility witness", ok,
               f"negligible to q=12: {neg.passed}; gn_norm(n=2) = {gn:.4f} > 1e-6; "
               f"reciprocal moderate: {mod.passed}")
    assert ok


def test_11_faithful_analytic(acceptance, rng):
    f, g = embed_analytic("exp(z)"), embed_analytic("z^2 + 1")
    fg = embed_analytic("exp(z)*(z^2 + 1)")
    z = rng.uniform(-3, 3, 100) + 1j * rng.uniform(-0.4, 0.4, 100)
    zeta = rng.uniform(0.01, 0.3, 100) + 0j
    lhs = evaluate(mul(f, g), z, zeta)
    rhs = evaluate(fg, z, zeta)
    err = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)))
    ok = err < 1e-12
    acceptance(11, "faithful analytic subalgebra", ok, f"max rel error {err:.1e} < 1e-12 at 100 points")
    assert ok


def chain_corpus(fam):
    tri = PiecewiseLinearDensity.triangle(0.0, 1.0)
    bump = PiecewiseLinearDensity.triangle(2.0, 0.5, label="bump")
    corpus = {"delta": embed_delta(0.0, 0, fam), "delta'": embed_delta(0.0, 1, fam),
              "H": embed_constant_at_infinity(ClassicalObject.heaviside(), fam),
              "triangle": embed_compact(ClassicalObject.compact(tri), fam),
              "bump": embed_compact(ClassicalObject.compact(bump), fam)}
    for t in ("1", "zeta", "zeta^2", "1/zeta", "zeta^(-2)"):
        corpus[t] = Representative.from_text(t)
    return corpus


def test_12_chain_certificates(acceptance, fam_plus):
    corpus = chain_corpus(fam_plus)
    r = build_chain(SpaceIndex(1, WeightFunction(), fam_plus), 3, corpus, budget=2000)
    counts = {k: (sum(c["passed"] for c in getattr(r, k)), len(getattr(r, k)))
              for k in ("product", "derivative", "stability", "weights")}
    ok = r.passed and len(corpus) == 10 and r.chain.indices == [1, 3, 7, 15]
    acceptance(12, "chain certificates", ok,
               f"n = {r.chain.indices}; " + ", ".join(f"{k} {a}/{b}" for k, (a, b) in counts.items()))
    assert ok
