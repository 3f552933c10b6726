"""Component-by-component construction of the generating vector.

At step d the per-point products p_n = prod_{j<=d} (1 + gamma_j S(n g_j mod N))
are kept, so each candidate costs one pass over n:

    e^2(g) = -1 + mean(p) + (gamma_{d+1} / N) sum_n p_n S(n g mod N).

Both p and S are symmetric under n -> N - n, so the sum runs over
n = 0..(N-1)/2 with doubled weights; g and N - g then tie exactly and the
smallest candidate wins.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import BoundParams, C_const, PreconditionFailed, rate_bound, T_d
from .emsum import FourierTable, build_fourier_table, is_prime
from .errors import BudgetExceeded, NonPrimeModulus, ValidationError
from .wce import LatticeRule, _check_table, residue_sums, wce_bruteforce, wce_spectral
from .weights import WeightParams, validate_kappa

BLOCK = 64
# Candidates whose varying term is within this relative distance of the
# minimum are treated as tied.  Exact ties are common (g, N - g and, at
# d = 2, g and its inverse) and rounding must not decide them.
TIE_RTOL = 1e-12
EXHAUSTIVE_CAP = 10**5


@dataclass
class CbcStep:
    d: int
    g: int
    e2: float
    bound: float  # certified gap of e2
    candidate_mean: float | None  # mean of e^2 over all candidates (None at d=1)
    thm1: dict = field(default_factory=dict)  # lambda -> bound or None

    @property
    def thm1_bound(self) -> float | None:
        vals = [v for v in self.thm1.values() if v is not None]
        return min(vals) if vals else None

    @property
    def precondition_ok(self) -> bool:
        return any(v is not None for v in self.thm1.values())


@dataclass
class CbcTrace:
    steps: list[CbcStep] = field(default_factory=list)

    @property
    def g(self) -> tuple[int, ...]:
        return tuple(st.g for st in self.steps)

    @property
    def e2(self) -> list[float]:
        return [st.e2 for st in self.steps]

    def to_list(self) -> list[dict]:
        return [{"d": st.d, "g": st.g, "e2": st.e2, "thm1_bound": st.thm1_bound} for st in self.steps]


def primitive_root(N: int) -> int:
    if not is_prime(N):
        raise NonPrimeModulus(N)
    if N == 2:
        return 1
    m, factors, p = N - 1, [], 2
    while p * p <= m:
        if m % p == 0:
            factors.append(p)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        factors.append(m)
    for r in range(2, N):
        if all(pow(r, (N - 1) // q, N) != 1 for q in factors):
            return r
    raise AssertionError("unreachable for prime N")


def _half_dots_naive(p: np.ndarray, S: np.ndarray, N: int, threads: int) -> np.ndarray:
    """D[g] = sum_n p_n S(n g mod N) for g = 1..N-1 (index g-1), symmetric half sum."""
    h = (N - 1) // 2
    n = np.arange(1, h + 1, dtype=np.int64)
    ph = p[1 : h + 1]
    base = float(p[0] * S[0])
    cands = np.arange(1, N, dtype=np.int64)
    blocks = [cands[i : i + BLOCK] for i in range(0, cands.size, BLOCK)]

    def run(gb):
        idx = (gb[:, None] * n[None, :]) % N
        return (S[idx] * ph[None, :]).sum(axis=1)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return base + 2.0 * np.concatenate(parts)


def _half_dots_fast(p: np.ndarray, S: np.ndarray, N: int, root: int) -> np.ndarray:
    """Same quantity via a circular correlation over the multiplicative group."""
    m = N - 1
    a = np.empty(m, dtype=np.int64)
    x = 1
    for k in range(m):
        a[k] = x
        x = x * root % N
    P = p[a]
    Sv = S[a]
    corr = np.fft.irfft(np.conj(np.fft.rfft(P)) * np.fft.rfft(Sv), n=m)
    D = np.empty(m)
    D[a - 1] = float(p[0] * S[0]) + corr  # corr[b] belongs to g = root^b
    return 0.5 * (D + D[::-1])  # D[g] and D[N-g] made exactly equal


def pick_smallest_min(score: np.ndarray, rtol: float = TIE_RTOL) -> int:
    """Smallest candidate g (1-based) whose score is within rtol of the minimum."""
    lo = float(score.min())
    tol = rtol * float(np.abs(score).max())
    return int(np.flatnonzero(score <= lo + tol)[0]) + 1


def cbc_construct(
    s: int,
    N: int,
    params: WeightParams,
    table: FourierTable | None = None,
    lams: Sequence[float] | None = None,
    method: str = "naive",
    threads: int = 1,
) -> tuple[LatticeRule, CbcTrace]:
    """Greedy coordinate-wise minimisation of the squared worst-case error.

    ``lams`` lists the lambda values at which the guaranteed bound is
    recorded per dimension (None entries mark a failed N precondition).
    """
    if s < 1:
        raise ValidationError("s must be >= 1")
    if not is_prime(N):
        raise NonPrimeModulus(N)
    if method not in ("naive", "fast"):
        raise ValidationError(f"unknown method {method!r}")
    if threads < 1:
        raise ValidationError("threads must be >= 1")
    gam = params.gammas_upto(s)
    if table is None:
        table = build_fourier_table(N, params.mu, params.kappa)
    _check_table(LatticeRule(N, (1,)), params, table)
    S, _ = residue_sums(table)
    n = np.arange(N, dtype=np.int64)
    root = primitive_root(N) if method == "fast" else None

    g = [1]
    means: list[float | None] = [None]
    p = 1.0 + gam[0] * S[(n * 1) % N]
    for d in range(1, s):
        if N == 2:
            gbest, mean_e2 = 1, None
        else:
            if method == "fast":
                D = _half_dots_fast(p, S, N, root)
            else:
                D = _half_dots_naive(p, S, N, threads)
            base = float(p[0] + 2.0 * p[1 : (N - 1) // 2 + 1].sum()) / N
            score = gam[d] * D / N
            cand = -1.0 + base + score
            gbest = pick_smallest_min(score)
            mean_e2 = math.fsum(cand) / (N - 1)
        g.append(gbest)
        means.append(mean_e2)
        p = p * (1.0 + gam[d] * S[(n * gbest) % N])

    rule = LatticeRule(N, tuple(g))
    lams = list(lams or [])
    bps = [BoundParams(l, params.mu, params.kappa) for l in lams]
    Cs = [C_const(bp) for bp in bps]
    if bps:
        validate_kappa(params, s)
    trace = CbcTrace()
    for d in range(1, s + 1):
        res = wce_spectral(rule.prefix(d), params, table)
        thm = {}
        for lam, bp, C in zip(lams, bps, Cs):
            b = rate_bound(N, T_d(d, params, bp, C), bp)
            thm[lam] = None if isinstance(b, PreconditionFailed) else b
        trace.steps.append(CbcStep(d, g[d - 1], res.e2, res.trunc_bound, means[d - 1], thm))
    return rule, trace


def construct_json(rule: LatticeRule, trace: CbcTrace, params: WeightParams) -> str:
    doc = {
        "N": rule.N,
        "s": rule.s,
        "params": params.to_dict(),
        "g": list(rule.g),
        "trace": trace.to_list(),
    }
    return json.dumps(doc, indent=2, sort_keys=False)


def candidate_errors(prefix: LatticeRule, params: WeightParams, table: FourierTable) -> np.ndarray:
    """e^2(prefix, g) for g = 1..N-1 by direct re-evaluation (test oracle)."""
    return np.array(
        [wce_spectral(LatticeRule(prefix.N, prefix.g + (c,)), params, table).e2 for c in range(1, prefix.N)]
    )


def cbc_exhaustive_check(
    s: int,
    N: int,
    params: WeightParams,
    cap: int = EXHAUSTIVE_CAP,
    K: int | None = None,
    table: FourierTable | None = None,
) -> LatticeRule:
    """Global minimiser of e^2 over all vectors with g_1 = 1.

    With ``K`` the brute-force dual sum over [-K, K]^s is the criterion;
    otherwise the spectral value from ``table`` (built if missing).
    Ties go to the lexicographically smallest vector.
    """
    if s < 1:
        raise ValidationError("s must be >= 1")
    if not is_prime(N):
        raise NonPrimeModulus(N)
    count = (N - 1) ** (s - 1)
    if count > cap:
        raise BudgetExceeded(f"{count} candidate vectors exceed cap {cap}")
    if K is None and table is None:
        table = build_fourier_table(N, params.mu, params.kappa)
    best = None
    for tail in itertools.product(range(1, N), repeat=s - 1):
        rule = LatticeRule(N, (1,) + tail)
        e2 = wce_bruteforce(rule, params, K).e2 if K is not None else wce_spectral(rule, params, table).e2
        if best is None or e2 < best[0] - TIE_RTOL * abs(best[0]):
            best = (e2, rule)
    return best[1]
