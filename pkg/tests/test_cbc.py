import json
import math

import numpy as np
import pytest

from loglattice.bounds import BoundParams, C_const, phi
from loglattice.cbc import (
    cbc_construct,
    cbc_exhaustive_check,
    candidate_errors,
    construct_json,
    pick_smallest_min,
    primitive_root,
)
from loglattice.emsum import build_fourier_table
from loglattice.errors import BudgetExceeded, NonPrimeModulus, ValidationError
from loglattice.wce import LatticeRule, wce_bruteforce, wce_spectral
from loglattice.weights import KAPPA_MIN, WeightParams

POW2 = WeightParams(mu=2.0, kappa=KAPPA_MIN, gamma_power=2.0)
TABLES = {}


def table(N, mu=2.0):
    if (N, mu) not in TABLES:
        TABLES[(N, mu)] = build_fourier_table(N, mu, KAPPA_MIN, 1e-10)
    return TABLES[(N, mu)]


def test_one_dimension_returns_one():
    rule, trace = cbc_construct(1, 13, POW2, table(13))
    assert rule.g == (1,) and trace.g == (1,)


def test_primitive_root():
    for N in (5, 7, 13, 101, 1009):
        r = primitive_root(N)
        assert len({pow(r, k, N) for k in range(N - 1)}) == N - 1
    with pytest.raises(NonPrimeModulus):
        primitive_root(12)


def test_tie_break_smallest():
    score = np.array([3.0, 1.0, 2.0, 1.0 + 1e-16, 1.0])
    assert pick_smallest_min(score) == 2


def test_n5_second_component_minimises_brute_force():
    p = WeightParams(mu=2.0, kappa=KAPPA_MIN, gammas=(1.0, 1.0))
    rule, _ = cbc_construct(2, 5, p, table(5))
    brute = [wce_bruteforce(LatticeRule(5, (1, g)), p, 400) for g in range(1, 5)]
    chosen = brute[rule.g[1] - 1]
    for b in brute:
        assert chosen.e2 <= b.e2 + chosen.trunc_bound + b.trunc_bound
    assert cbc_exhaustive_check(2, 5, p, K=400) == rule


@pytest.mark.parametrize("N", [7, 13, 31])
def test_step_optimality_and_mean(N):
    rule, trace = cbc_construct(4, N, POW2, table(N))
    for d in range(2, 5):
        errs = candidate_errors(rule.prefix(d - 1), POW2, table(N))
        achieved = trace.steps[d - 1].e2
        assert achieved <= errs.min() * (1 + 1e-12)
        assert achieved <= errs.mean() * (1 + 1e-12)
        assert trace.steps[d - 1].candidate_mean == pytest.approx(errs.mean(), rel=1e-10)


def test_trace_nondecreasing_and_certified():
    rule, trace = cbc_construct(5, 101, POW2, table(101))
    e2 = trace.e2
    assert all(b >= a for a, b in zip(e2, e2[1:]))
    assert all(1 <= g <= 100 for g in trace.g)
    for st, d in zip(trace.steps, range(1, 6)):
        ref = wce_spectral(rule.prefix(d), POW2, table(101))
        assert st.e2 == ref.e2


def test_deterministic_threads_and_fast_path():
    a, _ = cbc_construct(5, 1009, POW2, table(1009))
    b, _ = cbc_construct(5, 1009, POW2, table(1009))
    c, _ = cbc_construct(5, 1009, POW2, table(1009), threads=4)
    d, _ = cbc_construct(5, 1009, POW2, table(1009), method="fast")
    assert a == b == c == d


def test_exhaustive_small_cases():
    assert cbc_exhaustive_check(1, 7, POW2, table=table(7)).g == (1,)
    best = cbc_exhaustive_check(3, 7, POW2, table=table(7))
    rule, trace = cbc_construct(3, 7, POW2, table(7))
    assert wce_spectral(best, POW2, table(7)).e2 <= trace.e2[-1] * (1 + 1e-12)
    with pytest.raises(BudgetExceeded):
        cbc_exhaustive_check(4, 101, POW2, cap=10**5)


@pytest.mark.parametrize("N", [101, 1009])
def test_thm1_bound_on_lambda_grid(N):
    lams = [0.55, 0.65, 0.8, 0.9, 1.0]
    _, trace = cbc_construct(5, N, POW2, table(N), lams=lams)
    for st in trace.steps:
        for lam, rhs in st.thm1.items():
            if rhs is not None:
                assert st.e2 + st.bound <= rhs


@pytest.mark.parametrize("N", [101, 1009])
@pytest.mark.parametrize("lam", [0.6, 0.8, 1.0])
def test_one_dimensional_anchor(N, lam):
    gamma = 1.0
    p = WeightParams(mu=2.0, kappa=KAPPA_MIN, gammas=(gamma,))
    bp = BoundParams(lam, 2.0, KAPPA_MIN)
    e2 = wce_spectral(LatticeRule(N, (1,)), p, table(N))
    C = C_const(bp)
    rhs = 2.0 / N * C.value * gamma * max(1.0, math.log(1 / gamma)) ** bp.expo
    assert phi(e2.hi, bp) <= rhs


def test_construct_json_schema():
    rule, trace = cbc_construct(3, 101, POW2, table(101), lams=[0.8])
    doc = json.loads(construct_json(rule, trace, POW2))
    assert set(doc) == {"N", "s", "params", "g", "trace"}
    assert doc["g"] == list(rule.g)
    assert [t["d"] for t in doc["trace"]] == [1, 2, 3]
    assert all(set(t) == {"d", "g", "e2", "thm1_bound"} for t in doc["trace"])
    assert doc["trace"][0]["thm1_bound"] is None  # N=101 is below the precondition at lambda=0.8
    assert WeightParams.from_dict(doc["params"]) == POW2


def test_argument_checks():
    with pytest.raises(NonPrimeModulus):
        cbc_construct(2, 100, POW2)
    with pytest.raises(ValidationError):
        cbc_construct(0, 101, POW2)
    with pytest.raises(ValidationError):
        cbc_construct(2, 101, POW2, table(101), method="other")
