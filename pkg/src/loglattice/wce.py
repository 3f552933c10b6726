"""Squared worst-case error of rank-1 lattice rules.

Three independent routes are provided:

* :func:`wce_spectral` - per-point product over residue sums of the
  wrapped coefficient table (the fast route used by the CBC search);
* :func:`wce_bruteforce` - literal enumeration of the dual lattice inside
  the box [-K, K]^s, the oracle;
* :func:`wce_cosine_tent` - double sum of the truncated cosine kernel over
  the tent-transformed point set.

Every result carries ``trunc_bound``, a certified bound on the distance to
the exact infinite-series value (rounding allowance included).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np

from .emsum import EPS, FourierTable, is_prime, log_series_sum
from .errors import BudgetExceeded, NonPrimeModulus, TableMismatch, ValidationError
from .points import lattice_points, tent_transform
from .weights import Variant, WeightParams

BRUTE_CAP = 2 * 10**8
CHUNK = 1 << 20


class Method(str, Enum):
    SPECTRAL = "spectral"
    BRUTEFORCE = "bruteforce"
    COSINE_TENT = "cosine_tent"


@dataclass(frozen=True)
class LatticeRule:
    """Rank-1 lattice rule with prime modulus N and generating vector g."""

    N: int
    g: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "g", tuple(int(x) for x in self.g))
        if not is_prime(self.N):
            raise NonPrimeModulus(self.N)
        if len(self.g) == 0:
            raise ValidationError("generating vector is empty")
        bad = [x for x in self.g if not 1 <= x <= self.N - 1]
        if bad:
            raise ValidationError(f"components {bad} outside 1..{self.N - 1}")

    @property
    def s(self) -> int:
        return len(self.g)

    def prefix(self, d: int) -> "LatticeRule":
        return LatticeRule(self.N, self.g[:d])

    def to_dict(self) -> dict:
        return {"N": self.N, "g": list(self.g)}


@dataclass(frozen=True)
class ErrorResult:
    e2: float
    method: Method
    trunc_bound: float

    @property
    def lo(self) -> float:
        return self.e2 - self.trunc_bound

    @property
    def hi(self) -> float:
        return self.e2 + self.trunc_bound

    def to_dict(self) -> dict:
        return {"e2": self.e2, "method": Method(self.method).value, "bound": self.trunc_bound}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorResult":
        return cls(float(d["e2"]), Method(d["method"]), float(d["bound"]))


def agree(a: ErrorResult, b: ErrorResult) -> bool:
    """True when two results are consistent within their combined certificates."""
    return abs(a.e2 - b.e2) <= a.trunc_bound + b.trunc_bound


CSV_HEADER = ("N", "s", "method", "e2", "bound")


def write_error_csv(rows: Iterable[tuple[LatticeRule, ErrorResult]], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rule, res in rows:
        w.writerow([rule.N, rule.s, Method(res.method).value, repr(res.e2), repr(res.trunc_bound)])


def read_error_csv(fh: IO[str]) -> list[dict]:
    out = []
    for row in csv.DictReader(fh):
        out.append(
            {
                "N": int(row["N"]),
                "s": int(row["s"]),
                "method": Method(row["method"]),
                "e2": float(row["e2"]),
                "bound": float(row["bound"]),
            }
        )
    return out


# -- spectral route ------------------------------------------------------


def residue_sums(table: FourierTable) -> tuple[np.ndarray, float]:
    """S(a) = sum_h chat(h) cos(2 pi h a / N) for a = 0..N-1, plus a uniform error bound."""
    N = table.N
    S = np.fft.fft(table.values).real
    # exact symmetry S(a) = S(N - a), so g and N - g give bitwise-equal errors
    S = 0.5 * (S + S[(-np.arange(N)) % N])
    fft_round = 32 * EPS * (math.ceil(math.log2(N)) + 1) * float(np.abs(table.values).sum())
    return S, table.total_bound + fft_round


def symmetric_mean(x: np.ndarray) -> float:
    """Mean of an array with x[n] == x[N - n], summed over half the residues."""
    N = x.shape[0]
    if N <= 2:
        return math.fsum(x) / N
    h = (N - 1) // 2
    return (float(x[0]) + 2.0 * math.fsum(x[1 : h + 1])) / N


def _check_table(rule: LatticeRule, params: WeightParams, table: FourierTable) -> None:
    if params.variant is not Variant.LOG:
        raise ValidationError("the spectral route needs the log-Korobov variant")
    if not table.matches(rule.N, params.mu, params.kappa):
        raise TableMismatch(
            f"table (N={table.N}, mu={table.mu}, kappa={table.kappa}) does not match "
            f"rule N={rule.N} and params (mu={params.mu}, kappa={params.kappa})"
        )


def _product_error(factors: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Per-row bound on |prod(x + d) - prod(x)| given |d| <= deltas (rows = points)."""
    absf = np.abs(factors)
    return np.prod(absf + deltas, axis=0) - np.prod(absf, axis=0)


def wce_spectral(rule: LatticeRule, params: WeightParams, table: FourierTable) -> ErrorResult:
    """e^2 = -1 + (1/N) sum_n prod_j [1 + gamma_j S(n g_j mod N)]."""
    _check_table(rule, params, table)
    N, s = rule.N, rule.s
    gam = params.gammas_upto(s)
    S, dS = residue_sums(table)
    n = np.arange(N, dtype=np.int64)
    factors = np.empty((s, N))
    for j, gj in enumerate(rule.g):
        factors[j] = 1.0 + gam[j] * S[(n * gj) % N]
    prods = np.prod(factors, axis=0)
    e2 = symmetric_mean(prods) - 1.0
    deltas = (gam * dS)[:, None] * np.ones((1, N))
    upper = np.prod(np.abs(factors) + deltas, axis=0)
    bound = float(_product_error(factors, deltas).mean()) + (4 * s + 8) * EPS * float(upper.mean())
    return ErrorResult(e2, Method.SPECTRAL, bound)


def wce_cosine_tent_exact(rule: LatticeRule, params: WeightParams, table: FourierTable) -> ErrorResult:
    """Untruncated cosine-kernel double sum for the tent-transformed rule.

    Uses sigma_k(rho(x)) = sqrt(2) cos(2 pi k x), so each coordinate factor is
    1 + gamma_j (S((n-m) g_j) + S((n+m) g_j)) / 2.  Cost O(N^2 s).
    """
    _check_table(rule, params, table)
    N, s = rule.N, rule.s
    gam = params.gammas_upto(s)
    S, dS = residue_sums(table)
    n = np.arange(N, dtype=np.int64)
    diff = (n[:, None] - n[None, :]) % N
    summ = (n[:, None] + n[None, :]) % N
    prod = np.ones((N, N))
    upper = np.ones((N, N))
    for j, gj in enumerate(rule.g):
        fac = 1.0 + 0.5 * gam[j] * (S[(diff * gj) % N] + S[(summ * gj) % N])
        absf = np.abs(fac)
        upper = upper * (absf + gam[j] * dS)
        prod = prod * fac
    e2 = math.fsum(prod.ravel()) / N**2 - 1.0
    bound = float((upper - np.abs(prod)).mean()) + (4 * s + 8) * EPS * float(upper.mean())
    return ErrorResult(e2, Method.COSINE_TENT, bound)


# -- brute-force routes --------------------------------------------------


def _unit_partial(params: WeightParams, K: int) -> tuple[np.ndarray, float]:
    k = np.arange(1, K + 1, dtype=float)
    w = params.unit_weight_array(k)
    return w, math.fsum(w)


def _unit_tail(params: WeightParams, K: int, tol: float = 1e-13) -> float:
    """Upper bound on sum_{k > K} of the unit weight."""
    if params.variant is Variant.LOG:
        return log_series_sum(params.mu, params.kappa, K + 1, tol).hi
    return params.unit_tail_upper(K)


def _enumerate_dual(N: int, g: Sequence[int], rows: list[np.ndarray], K: int, cap: int) -> float:
    """Sum of prod_j rows[j][k_j + K] over k in [-K, K]^s with k.g = 0 mod N, k != 0.

    The box is walked in odometer order (last coordinate fastest) in chunks.
    """
    s = len(g)
    side = 2 * K + 1
    total_pts = side**s
    if total_pts > cap:
        raise BudgetExceeded(f"(2K+1)^s = {total_pts} exceeds cap {cap}")
    ks = np.arange(-K, K + 1, dtype=np.int64)
    res = [(ks * gj) % N for gj in g]
    origin = sum(K * side ** (s - 1 - j) for j in range(s))
    partials = []
    for start in range(0, total_pts, CHUNK):
        flat = np.arange(start, min(start + CHUNK, total_pts), dtype=np.int64)
        idx = np.unravel_index(flat, (side,) * s)
        r = np.zeros(flat.shape, dtype=np.int64)
        w = np.ones(flat.shape)
        for j in range(s):
            r += res[j][idx[j]]
            w *= rows[j][idx[j]]
        mask = (r % N) == 0
        if start <= origin < start + flat.size:
            mask[origin - start] = False
        partials.append(float(w[mask].sum()))
    return math.fsum(partials)


def _box_tail_bound(
    N: int, gam: np.ndarray, P: float, tail: float, first_out: float, integral: float
) -> float:
    """Bound on the dual-lattice mass outside the box [-K, K]^s.

    Minimum of the product-tail over-count (ignores the congruence) and a
    residue-class union bound: for fixed other coordinates, the admissible
    |k_j| > K form one class mod N on each side, whose sum is at most
    w(K+1) + (1/N) * integral_K^inf w.
    """
    full = 1.0 + 2.0 * gam * (P + tail)
    part = 1.0 + 2.0 * gam * P
    overcount = float(np.prod(full) - np.prod(part))
    per_class = 2.0 * gam * (first_out + integral / N)
    union = 0.0
    for j in range(len(gam)):
        others = np.prod(np.delete(full, j))
        union += float(per_class[j] * others)
    return min(overcount, union)


def _brute(rule: LatticeRule, params: WeightParams, K: int, cap: int) -> ErrorResult:
    if K < rule.N:
        raise ValidationError(f"box half-width K={K} must be >= N={rule.N}")
    s = rule.s
    gam = params.gammas_upto(s)
    w1, P = _unit_partial(params, K)
    sym = np.concatenate([w1[::-1], [1.0], w1])  # index k + K
    rows = []
    for j in range(s):
        row = gam[j] * sym
        row[K] = 1.0
        rows.append(row)
    e2 = _enumerate_dual(rule.N, rule.g, rows, K, cap)
    tail = _unit_tail(params, K)
    first_out = float(params.unit_weight_array(np.array([K + 1.0]))[0])
    integral = params.unit_tail_upper(K)
    bound = _box_tail_bound(rule.N, gam, P, tail, first_out, integral)
    bound += (s + 32) * EPS * e2
    return ErrorResult(e2, Method.BRUTEFORCE, bound)


def wce_bruteforce(rule: LatticeRule, params: WeightParams, K: int, cap: int = BRUTE_CAP) -> ErrorResult:
    """Dual-lattice sum of the product weights over the box [-K, K]^s."""
    return _brute(rule, params, K, cap)


def wce_classical(
    rule: LatticeRule, alpha: float, gammas: Sequence[float], K: int, cap: int = BRUTE_CAP
) -> ErrorResult:
    """Brute-force squared worst-case error in the classical Korobov space."""
    if not alpha > 0.5:
        raise ValidationError(f"alpha must be > 1/2, got {alpha}")
    params = WeightParams(
        mu=2.0, kappa=math.e, gammas=tuple(gammas)[: rule.s], variant=Variant.CLASSICAL, alpha=alpha
    )
    return _brute(rule, params, K, cap)


# -- cosine / tent route -------------------------------------------------


def wce_cosine_tent(
    rule: LatticeRule, params: WeightParams, Kmax: int, cap: int = BRUTE_CAP
) -> ErrorResult:
    """e^2 = -1 + (1/N^2) sum_{n,m} C_trunc(rho(x_n), rho(x_m)).

    The truncated kernel keeps every k in {0..Kmax}^s, i.e. per coordinate
    1 + sum_{k=1}^{Kmax} r(k) sigma_k(x) sigma_k(y).
    """
    if Kmax < 1:
        raise ValidationError("Kmax must be >= 1")
    N, s = rule.N, rule.s
    if N * N * s + N * Kmax * s > cap:
        raise BudgetExceeded(f"cosine double sum needs {N * N * s + N * Kmax * s} operations")
    gam = params.gammas_upto(s)
    w1, P = _unit_partial(params, Kmax)
    ps = tent_transform(lattice_points(rule))
    k = np.arange(1, Kmax + 1, dtype=float)
    total = np.ones((N, N))
    for j in range(s):
        u = ps.points[:, j]
        sig = math.sqrt(2.0) * np.cos(np.pi * u[:, None] * k[None, :])
        total = total * (1.0 + gam[j] * (sig * w1[None, :]) @ sig.T)
    e2 = math.fsum(total.ravel()) / N**2 - 1.0
    tail = _unit_tail(params, Kmax)
    full = np.prod(1.0 + 2.0 * gam * (P + tail))
    bound = float(full - np.prod(1.0 + 2.0 * gam * P))
    bound += 4 * s * (Kmax + N) * EPS * float(full)
    return ErrorResult(e2, Method.COSINE_TENT, bound)
