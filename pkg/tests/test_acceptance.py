"""The nine acceptance criteria, each at its stated scale and tolerance.

Every test records a single PASS/FAIL line (shown in the pytest terminal
summary) before asserting.
"""

import cmath
import csv
import io
import itertools
import math
import time

import numpy as np
import pytest

from loglattice.bounds import (
    BoundParams,
    jensen_general,
    lemma3_bound,
    phi,
    phi_inv_numeric,
    phi_inv_upper,
    scaled_weights,
    tau,
    thm2_transfer,
)
from loglattice.cbc import candidate_errors, cbc_construct, cbc_exhaustive_check
from loglattice.cli import main as cli_main
from loglattice.emsum import build_fourier_table, chat, em_tail
from loglattice.points import lattice_points, nonholder_drop, nonholder_grid, nonholder_norm, qmc_integrate
from loglattice.wce import LatticeRule, wce_bruteforce, wce_classical, wce_cosine_tent, wce_spectral
from loglattice.weights import KAPPA_MIN, WeightParams, required_kappa

import oracles

EPS = np.finfo(float).eps
REL = 1e-12  # relative float slack for inequalities that can hold with equality


# -- 1 ------------------------------------------------------------------------


def test_criterion_1_engine_equivalence(acceptance):
    t0 = time.perf_counter()
    worst, fails = 0.0, []
    for mu, N, s in itertools.product((1.5, 2.0), (5, 13, 31), (1, 2)):
        p = WeightParams(mu=mu, kappa=KAPPA_MIN, gammas=(1.0, 0.25)[:s])
        rule = LatticeRule(N, (1, {5: 2, 13: 5, 31: 12}[N])[:s])
        spec = wce_spectral(rule, p, build_fourier_table(N, mu, KAPPA_MIN, 1e-10))
        for other in (wce_bruteforce(rule, p, 2000), wce_cosine_tent(rule, p, 2000)):
            gap = abs(spec.e2 - other.e2)
            allow = spec.trunc_bound + other.trunc_bound
            worst = max(worst, gap / allow)
            if gap > allow:
                fails.append((mu, N, s, other.method.value, gap, allow))
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < 60
    acceptance(1, ok, f"24 comparisons, max gap/allowance {worst:.5f}, {elapsed:.1f}s (limit 60s) {fails or ''}")
    assert ok


# -- 2 ------------------------------------------------------------------------


def test_criterion_2_wrapped_coefficients(acceptance):
    t0 = time.perf_counter()
    N, mu = 13, 2.0
    lo, hi = oracles.wrapped_direct(N, mu, KAPPA_MIN, M=10**8)
    clo, chi = oracles.chat_from_classes(lo, hi)
    chat_fail = []
    for h in range(N):
        c = chat(h, N, mu, KAPPA_MIN, 1e-12)
        if not (c.lo <= chi[h] and c.hi >= clo[h]):
            chat_fail.append(h)

    # Euler-Maclaurin tails against the same direct class sums
    def first_terms(a, count):
        return math.fsum(float(oracles.f_unit(a + N * l, mu, KAPPA_MIN)) for l in range(count))

    em_fail, worst_ratio, checks = [], 0.0, 0
    for h in range(N):
        cls = N - 1 if h == 0 else h - 1  # class holding h + N l
        shift = 1 if h == 0 else 0  # h = 0 starts at l = 1 in the class a = N
        for m, z1 in itertools.product((1, 2, 3, 4), (1, 2, 5, 10)):
            head = first_terms(N if h == 0 else h, z1 - shift)
            t_lo, t_hi = lo[cls] - head, hi[cls] - head
            em = em_tail(h, N, mu, KAPPA_MIN, m, z1)
            err = max(em.value - t_hi, t_lo - em.value, 0.0)
            worst_ratio = max(worst_ratio, err / em.bound)
            checks += 1
            if not (em.lo <= t_hi and em.hi >= t_lo):
                em_fail.append((h, m, z1))
    elapsed = time.perf_counter() - t0
    ok = not chat_fail and not em_fail and elapsed < 120
    acceptance(
        2,
        ok,
        f"13 coefficients vs direct sum to 1e8, {checks} remainder checks "
        f"(max excess/bound {worst_ratio:.2e}), {elapsed:.1f}s (limit 120s) {chat_fail or ''}{em_fail or ''}",
    )
    assert ok


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_cbc_guarantee(acceptance):
    params = WeightParams(mu=2.0, kappa=KAPPA_MIN, gamma_power=2.0)
    lams = [0.6, 0.8, 1.0]
    checked, skipped, fails, margin = 0, 0, [], math.inf
    for N in (101, 1009, 10007):
        _, trace = cbc_construct(5, N, params, build_fourier_table(N, 2.0, KAPPA_MIN, 1e-10), lams=lams)
        for st in trace.steps:
            for lam, rhs in st.thm1.items():
                if rhs is None:
                    skipped += 1
                    continue
                checked += 1
                margin = min(margin, rhs / (st.e2 + st.bound))
                if st.e2 + st.bound > rhs:
                    fails.append((N, st.d, lam))
    ok = not fails and checked > 0
    acceptance(
        3,
        ok,
        f"{checked} (N, d, lambda) cases with the N precondition met, {skipped} skipped by it; "
        f"smallest bound/error ratio {margin:.2f} {fails or ''}",
    )
    assert ok


# -- 4 ------------------------------------------------------------------------


def _grid_params():
    out = []
    for mu in (1.1, 1.5, 2.0, 4.0):
        for t in (0.05, 0.35, 0.7, 1.0):
            out.append(BoundParams(1 / mu + t * (1 - 1 / mu), mu, KAPPA_MIN))
    return out


def test_criterion_4_lemma_suite(acceptance):
    rng = np.random.default_rng(20240601)
    bps = _grid_params()
    viol = {}
    n = 10**4

    # generalised Jensen, finite form: random lengths and totals
    v = 0
    for i in range(n):
        bp = bps[i % len(bps)]
        a = rng.dirichlet(np.ones(rng.integers(1, 20))) * rng.uniform(0, 2)
        lhs, rhs = jensen_general(lambda z: phi(z, bp), a, "finite")
        v += lhs > rhs * (1 + REL)
    viol["jensen finite"] = v

    # infinite form, truncated geometric and harmonic-type sequences
    v = 0
    for i in range(n):
        bp = bps[i % len(bps)]
        k = np.arange(1, 201)
        a = rng.uniform(0, 1) * (rng.uniform(0.2, 0.95) ** k if i % 2 else 1.0 / k**2)
        lhs, rhs = jensen_general(lambda z: phi(z, bp), a, "infinite")
        v += lhs > rhs * (1 + REL)
    viol["jensen infinite"] = v

    # (a) strict monotonicity on a dense grid of [0, 2]
    z = np.linspace(0, 2, n)
    viol["monotone"] = sum(int(np.sum(np.diff(phi(z, bp)) <= 0)) for bp in bps)

    # (b) midpoint concavity on random pairs
    v = 0
    for bp in bps:
        x, y = rng.uniform(0, 2, n), rng.uniform(0, 2, n)
        mid, avg = phi(0.5 * (x + y), bp), 0.5 * (phi(x, bp) + phi(y, bp))
        v += int(np.sum(mid < avg - REL * np.maximum(1, avg)))
    viol["concave"] = v

    # (c) phi(1) >= 1 on a lambda grid for each mu
    v = 0
    for mu in (1.1, 1.5, 2.0, 4.0):
        for lam in np.linspace(1 / mu, 1, n // 4 + 1)[1:]:
            v += phi(1.0, BoundParams(float(lam), mu, KAPPA_MIN)) < 1.0
    viol["phi(1)>=1"] = v

    # (d) submultiplicativity on (0, e^{-2 mu}]
    v = 0
    for bp in bps:
        x = bp.knot * (1 - rng.uniform(0, 1, n))
        y = bp.knot * (1 - rng.uniform(0, 1, n))
        v += int(np.sum(phi(x * y, bp) > phi(x, bp) * phi(y, bp) * (1 + REL)))
    viol["submultiplicative"] = v

    # (e) inverse bound against bisection
    v = 0
    for i in range(n):
        bp = bps[i % len(bps)]
        ymax = min(bp.knot_value, 1 - 1e-12)
        y = ymax * 10 ** (-rng.uniform(0, 12))
        v += phi_inv_numeric(y, bp) > phi_inv_upper(y, bp) * (1 + REL)
    viol["inverse bound"] = v

    # Lemma 3 domination, k = 1..1e4, gamma in {1/4, 1, 4}, mu = 2, lambda = 0.9
    v = 0
    k = np.arange(1, n + 1)
    for gamma in (0.25, 1.0, 4.0):
        kappa = max(KAPPA_MIN, required_kappa(gamma, 2.0))
        bp = BoundParams(0.9, 2.0, kappa)
        r = gamma / (k * np.log(kappa * k) ** 2)
        rhs = np.array([lemma3_bound(int(kk), gamma, bp) for kk in k])
        v += int(np.sum(phi(r, bp) > rhs * (1 + REL)))
    viol["lemma3"] = v

    ok = all(x == 0 for x in viol.values())
    acceptance(4, ok, "violations " + ", ".join(f"{key}={val}" for key, val in viol.items()))
    assert ok


# -- 5 ------------------------------------------------------------------------


def test_criterion_5_transfer(acceptance):
    mu = 2.0
    k = np.arange(1, 10**6 + 1, dtype=float)
    logk = np.log(KAPPA_MIN * k)
    pointwise = 0
    cases = 0
    for alpha in (0.6, 0.75, 1.0, 1.5, 2.0, 3.0):
        for frac in (0.05, 0.3, 0.6, 1.0):
            lam = 1 / (2 * alpha) + frac * (1 - 1 / (2 * alpha))
            t = tau(mu, alpha, KAPPA_MIN, lam)
            for gamma in (1.0, 0.3):
                lhs = (gamma * k ** (-2 * alpha)) ** lam
                rhs = gamma**lam * t / (k * logk**mu)
                pointwise += int(np.sum(lhs > rhs * (1 + REL)))
                cases += 1

    # end-to-end at N = 13, s = 2, alpha = 1, lambda = 0.75, gamma = (1, 1/4)
    lam, alpha, gam = 0.75, 1.0, (1.0, 0.25)
    rule = LatticeRule(13, (1, 5))
    t = tau(mu, alpha, KAPPA_MIN, lam)
    plog = WeightParams(mu=mu, kappa=KAPPA_MIN, gammas=scaled_weights(gam, lam, t))
    e_log = wce_spectral(rule, plog, build_fourier_table(13, mu, KAPPA_MIN, 1e-10))
    e_cls = wce_classical(rule, alpha, gam, 2000)
    # certified: the largest possible classical error vs the smallest possible transfer bound
    lhs, rhs = math.sqrt(e_cls.hi), thm2_transfer(e_log.lo, lam)
    ok = pointwise == 0 and lhs <= rhs
    acceptance(
        5,
        ok,
        f"{cases} (alpha, lambda, gamma) grids x 1e6 k: {pointwise} violations; "
        f"N=13 classical e <= {lhs:.4g} vs transferred bound >= {rhs:.4g}",
    )
    assert ok


# -- 6 ------------------------------------------------------------------------


def test_criterion_6_step_optimality(acceptance):
    params = WeightParams(mu=2.0, kappa=KAPPA_MIN, gamma_power=2.0)
    tab = build_fourier_table(7, 2.0, KAPPA_MIN, 1e-10)
    rule, trace = cbc_construct(3, 7, params, tab)
    step_fail = []
    for d in (2, 3):
        prefix = rule.prefix(d - 1)
        spectral = candidate_errors(prefix, params, tab)
        brute = [wce_bruteforce(LatticeRule(7, prefix.g + (c,)), params, 60) for c in range(1, 7)]
        chosen = brute[rule.g[d - 1] - 1]
        if trace.steps[d - 1].e2 > spectral.min() * (1 + REL):
            step_fail.append(("spectral", d))
        if any(chosen.lo > b.hi for b in brute):
            step_fail.append(("bruteforce", d))
    p2 = WeightParams(mu=2.0, kappa=KAPPA_MIN, gammas=(1.0, 1.0))
    cbc5, _ = cbc_construct(2, 5, p2, build_fourier_table(5, 2.0, KAPPA_MIN, 1e-10))
    glob = cbc_exhaustive_check(2, 5, p2, K=400)
    ok = not step_fail and cbc5 == glob
    acceptance(6, ok, f"N=7 g={rule.g} steps minimal {step_fail or ''}; N=5 CBC {cbc5.g} vs global {glob.g}")
    assert ok


# -- 7 ------------------------------------------------------------------------


def test_criterion_7_qmc_sanity(acceptance):
    worst = 0.0
    for N in (5, 13):
        params = WeightParams(mu=2.0, kappa=KAPPA_MIN, gamma_power=2.0)
        rule, _ = cbc_construct(2, N, params, build_fourier_table(N, 2.0, KAPPA_MIN, 1e-10))
        ps = lattice_points(rule)
        for k in itertools.product(range(-20, 21), repeat=2):
            val = qmc_integrate(lambda x: cmath.exp(2j * math.pi * (k[0] * x[0] + k[1] * x[1])), ps)
            expect = 1.0 if (k[0] * rule.g[0] + k[1] * rule.g[1]) % N == 0 else 0.0
            worst = max(worst, abs(val.real - expect), abs(val.imag))
    ortho_ok = worst <= 1e-12

    mu = 1.5
    unit = WeightParams(mu=mu, kappa=KAPPA_MIN, gammas=(1.0,))
    norm = nonholder_norm(mu, KAPPA_MIN)
    details, qmc_ok = [], True
    for N in (101, 1009):
        rule, _ = cbc_construct(1, N, unit, build_fourier_table(N, mu, KAPPA_MIN, 1e-10))
        ps = lattice_points(rule)
        vals, bnds = nonholder_grid(N, mu, KAPPA_MIN, 1e-10)
        est = qmc_integrate(lambda x: vals[int(round(x[0] * N)) % N], ps)
        e2 = wce_spectral(rule, unit, build_fourier_table(N, mu, KAPPA_MIN, 1e-10))
        lhs = abs(est) + float(bnds.max())
        rhs = math.sqrt(e2.lo) * norm.lo
        qmc_ok &= lhs <= rhs
        details.append(f"N={N}: |Q f| <= {lhs:.4g} vs e*||f|| >= {rhs:.4g}")
    ok = ortho_ok and qmc_ok
    acceptance(7, ok, f"character sums max error {worst:.1e}; " + "; ".join(details))
    assert ok


# -- 8 ------------------------------------------------------------------------


def test_criterion_8_rate_ratio(acceptance, capsys):
    params = WeightParams(mu=2.0, kappa=KAPPA_MIN, gamma_power=2.0).to_json()
    code = cli_main(["demo", "--kind", "rate", "--params", params, "--lambda", "0.8", "--s", "5"])
    out = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(out)))
    ratios = [float(r["ratio"]) for r in rows if r["ratio"]]
    ok = code == 0 and len(ratios) == len(rows) == 9 and max(ratios) <= 1.0
    acceptance(
        8,
        ok,
        f"primes {rows[0]['N']}..{rows[-1]['N']}: ratio range [{min(ratios):.4f}, {max(ratios):.4f}] (<= 1 required)",
    )
    assert ok


# -- 9 ------------------------------------------------------------------------


def test_criterion_9_witness(acceptance):
    seq = []
    for e in range(8, 17):
        m = 2**e
        d = nonholder_drop(m, 1.5, KAPPA_MIN, 1e-8)
        seq.append((m, d, math.sqrt(m)))
    within = all(d.bound <= 1e-8 for _, d, _ in seq)
    strict = all(seq[i + 1][2] * seq[i + 1][1].lo > seq[i][2] * seq[i][1].hi for i in range(len(seq) - 1))
    ok = within and strict
    vals = ", ".join(f"{r * d.value:.4f}" for _, d, r in seq)
    acceptance(9, ok, f"m^(1/2) drop for m=2^8..2^16: {vals}")
    assert ok
