"""Certified evaluation of slowly converging log-weight series.

All series here are of the form

    sum_{l >= l0}  f(l),     f(x) = 1 / ((h + N x) * log(kappa (h + N x))**mu),

summed directly up to a split point ``z1`` and closed with an
Euler-Maclaurin tail of order ``m``.  Odd derivatives at the split point are
built from the exact recursion

    d/dx g_{k,b} = -N (k g_{k+1,b} + b g_{k+1,b+1}),
    g_{k,b}(x) = 1 / ((h + N x)**k * log(kappa (h + N x))**b),

so no numerical differentiation enters the certificate.  The remainder is
bounded uniformly in the upper limit by

    |R| < (pi^2/6) * mu (mu+1) ... (mu+2m-2) / N * (pi z1)**(-2m).

Every returned bound also carries a floating-point allowance of
``ROUND_ULPS`` units in the last place of the absolute magnitudes involved.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import NonPrimeModulus, OutOfTable, ParamOutOfRange, TolUnreachable, ValidationError

EPS = float(np.finfo(float).eps)
ROUND_ULPS = 16
DEFAULT_ORDER = 3
MAX_TERMS = 10**7

# B_2, B_4, ..., B_30
_BERNOULLI_EVEN = (
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
    Fraction(854513, 138),
    Fraction(-236364091, 2730),
    Fraction(8553103, 6),
    Fraction(-23749461029, 870),
    Fraction(8615841276005, 14322),
)


@dataclass(frozen=True)
class CertifiedValue:
    """A float together with a certified bound on its absolute error."""

    value: float
    bound: float

    def __post_init__(self):
        if not self.bound >= 0:
            raise ValueError(f"negative certificate {self.bound!r}")

    @property
    def lo(self) -> float:
        return self.value - self.bound

    @property
    def hi(self) -> float:
        return self.value + self.bound

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def bernoulli_even(j: int) -> float:
    """Return B_{2j} for 1 <= j <= 15."""
    if not 1 <= j <= len(_BERNOULLI_EVEN):
        raise OutOfTable(f"B_{2 * j} is outside the table (2j <= 30)")
    return float(_BERNOULLI_EVEN[j - 1])


def rising(mu: float, n: int) -> float:
    """mu (mu+1) ... (mu+n-1)."""
    out = 1.0
    for i in range(n):
        out *= mu + i
    return out


# -- symbolic derivatives ------------------------------------------------


@lru_cache(maxsize=256)
def _expansion(n: int, mu: float) -> tuple[tuple[int, int, float], ...]:
    # f^(n) = (-N)^n * sum c * g_{k, mu+l}; entries are (k, l, c)
    terms = {(1, 0): 1.0}
    for _ in range(n):
        nxt: dict[tuple[int, int], float] = {}
        for (k, l), c in terms.items():
            nxt[(k + 1, l)] = nxt.get((k + 1, l), 0.0) + c * k
            nxt[(k + 1, l + 1)] = nxt.get((k + 1, l + 1), 0.0) + c * (mu + l)
        terms = nxt
    return tuple((k, l, c) for (k, l), c in sorted(terms.items()))


def derivative_terms(n: int, mu: float, N: float = 1.0) -> list[tuple[float, int, float]]:
    """Expansion of f^(n) as ``[(coefficient, k, beta), ...]`` over g_{k,beta}."""
    sign = (-float(N)) ** n
    return [(sign * c, k, mu + l) for k, l, c in _expansion(n, float(mu))]


def g_value(k: int, beta: float, x, h, N: float, kappa: float):
    """g_{k,beta}(x) = (h + N x)^-k * log(kappa (h + N x))^-beta (array-friendly)."""
    u = np.asarray(h, dtype=float) + N * np.asarray(x, dtype=float)
    L = math.log(kappa) + np.log(u)
    return np.exp(-k * np.log(u) - beta * np.log(L))


def derivative_value(n: int, x, h, N: float, mu: float, kappa: float):
    """Evaluate f^(n)(x) from the symbolic expansion (array-friendly in x, h)."""
    u = np.asarray(h, dtype=float) + N * np.asarray(x, dtype=float)
    logu = np.log(u)
    logL = np.log(math.log(kappa) + logu)
    sign = -1.0 if n % 2 else 1.0
    total = np.zeros(np.broadcast(u).shape)
    for k, l, c in _expansion(n, float(mu)):
        total = total + c * np.exp(n * math.log(N) - k * logu - (mu + l) * logL)
    return sign * total


def f_value(x, h, N: float, mu: float, kappa: float):
    u = np.asarray(h, dtype=float) + N * np.asarray(x, dtype=float)
    return 1.0 / (u * (math.log(kappa) + np.log(u)) ** mu)


# -- Euler-Maclaurin tail ------------------------------------------------


def remainder_bound(mu: float, m: int, N: float, z1: float) -> float:
    """Uniform bound on the Euler-Maclaurin remainder for order m from z1."""
    return (math.pi**2 / 6.0) * rising(mu, 2 * m - 1) / N * (math.pi * z1) ** (-2 * m)


def split_point(mu: float, m: int, N: float, target: float) -> int:
    """Smallest integer z1 >= 1 whose remainder bound is <= target."""
    if not target > 0:
        raise TolUnreachable("tolerance must be positive")
    c = (math.pi**2 / 6.0) * rising(mu, 2 * m - 1) / N
    z_real = (c / target) ** (1.0 / (2 * m)) / math.pi
    if not z_real <= MAX_TERMS:
        raise TolUnreachable(f"tolerance {target!r} needs a split point near {z_real:.3g}")
    z = max(1, math.ceil(z_real))
    while z > 1 and remainder_bound(mu, m, N, z - 1) <= target:
        z -= 1
    while remainder_bound(mu, m, N, z) > target:
        z += 1
    return z


def _check_em_args(h, N, mu, kappa, m, z1):
    if m < 1 or m > len(_BERNOULLI_EVEN):
        raise ParamOutOfRange(f"order m={m} outside 1..{len(_BERNOULLI_EVEN)}")
    if z1 < 1:
        raise ParamOutOfRange(f"split point z1={z1} must be >= 1")
    if not mu > 1:
        raise ParamOutOfRange(f"exponent mu={mu} must be > 1")
    if N <= 0:
        raise ParamOutOfRange("N must be positive")
    hmin = float(np.min(h))
    if hmin < 0:
        raise ParamOutOfRange("offset h must be >= 0")
    if math.log(kappa) + math.log(hmin + N * z1) < 1.0:
        raise ParamOutOfRange("log(kappa (h + N z1)) < 1: remainder bound does not apply")


def _em_tail_arrays(h: np.ndarray, N: float, mu: float, kappa: float, m: int, z1: int):
    """Vectorised tail sum_{l >= z1} f(l); returns (values, bounds)."""
    h = np.asarray(h, dtype=float)
    u = h + N * z1
    L = math.log(kappa) + np.log(u)
    integral = L ** (1.0 - mu) / ((mu - 1.0) * N)
    half = 0.5 / (u * L**mu)
    corr = np.zeros_like(h)
    mag = integral + half
    for j in range(1, m + 1):
        coef = float(_BERNOULLI_EVEN[j - 1] / math.factorial(2 * j))
        term = coef * derivative_value(2 * j - 1, z1, h, N, mu, kappa)
        corr = corr + term
        mag = mag + np.abs(term)
    values = integral + half - corr
    bounds = remainder_bound(mu, m, N, z1) + ROUND_ULPS * EPS * mag
    return values, bounds


def em_tail(h: int, N: int, mu: float, kappa: float, m: int, z1: int) -> CertifiedValue:
    """Euler-Maclaurin value of sum_{l >= z1} f(l) with its certified bound."""
    _check_em_args(h, N, mu, kappa, m, z1)
    v, b = _em_tail_arrays(np.array([h]), float(N), float(mu), float(kappa), m, z1)
    return CertifiedValue(float(v[0]), float(b[0]))


def _progression_sums(
    a: np.ndarray,
    N: float,
    mu: float,
    kappa: float,
    l0: int,
    tol: float,
    m: int = DEFAULT_ORDER,
    max_terms: int = MAX_TERMS,
):
    """Certified sum_{l >= l0} f(a + N l) for each offset in ``a``.

    The direct part runs over l = l0..z1-1 in ascending order; the split
    point is the smallest z1 whose remainder bound is <= tol/4.
    """
    a = np.asarray(a, dtype=float)
    z1 = max(split_point(mu, m, N, tol / 4.0), l0, 1)
    if z1 - l0 > max_terms:
        raise TolUnreachable(
            f"tolerance {tol!r} needs {z1 - l0} direct terms (budget {max_terms})"
        )
    _check_em_args(a, N, mu, kappa, m, z1)
    first = float(np.min(a)) + N * l0
    if not (first > 0 and math.log(kappa) + math.log(first) > 0):
        raise ParamOutOfRange("first summand has non-positive argument or logarithm")
    lk = math.log(kappa)
    acc = np.zeros_like(a)
    for l in range(l0, z1):
        u = a + N * l
        acc += 1.0 / (u * (lk + np.log(u)) ** mu)
    tail, tail_b = _em_tail_arrays(a, N, mu, kappa, m, z1)
    values = acc + tail
    bounds = tail_b + ROUND_ULPS * EPS * acc + EPS * np.abs(values)
    if np.any(bounds > tol):
        raise TolUnreachable(
            f"rounding allowance {float(np.max(bounds))!r} exceeds tolerance {tol!r}"
        )
    return values, bounds


def log_series_sum(
    p: float, kappa: float, start: int = 1, tol: float = 1e-12, max_terms: int = MAX_TERMS
) -> CertifiedValue:
    """Certified value of sum_{k >= start} 1 / (k (log kappa k)^p)."""
    if not p > 1:
        raise ParamOutOfRange(f"series diverges for p={p} <= 1")
    if start < 1:
        raise ParamOutOfRange("start must be >= 1")
    v, b = _progression_sums(np.zeros(1), 1.0, float(p), float(kappa), start, tol, max_terms=max_terms)
    return CertifiedValue(float(v[0]), float(b[0]))


def residue_class_sums(N: int, mu: float, kappa: float, tol: float = 1e-12):
    """T(a) = sum_{l >= 0} r(a + N l) for a = 1..N (unit weight), any N >= 1.

    Returns ``(values, bounds)`` arrays indexed by a - 1.
    """
    if N < 1:
        raise ValidationError("modulus must be >= 1")
    a = np.arange(1, N + 1, dtype=float)
    return _progression_sums(a, float(N), float(mu), float(kappa), 0, tol)


# -- wrapped coefficients ------------------------------------------------


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def _wrapped_arrays(N: int, mu: float, kappa: float, tol_entry: float):
    """chat(h) for h = 0..N-1 (any modulus N >= 1), each bound <= tol_entry."""
    half_tol = tol_entry / 2.0
    # T(a) = sum_{l>=0} f(a + N l) for a = 1..N; T(N) is the h = 0 progression
    a = np.arange(1, N + 1, dtype=float)
    T, Tb = _progression_sums(a, float(N), mu, kappa, 0, half_tol)
    hs = np.arange(0, N // 2 + 1)
    vals = np.empty(N)
    bnds = np.empty(N)
    vals[0] = 2.0 * T[N - 1]
    bnds[0] = 2.0 * Tb[N - 1] + EPS * vals[0]
    if N > 1:
        h = hs[1:]
        v = T[h - 1] + T[N - h - 1]
        vals[h] = v
        bnds[h] = Tb[h - 1] + Tb[N - h - 1] + EPS * v
        vals[N - h] = vals[h]
        bnds[N - h] = bnds[h]
    if np.any(bnds > tol_entry):
        raise TolUnreachable(f"entry bound exceeds tolerance {tol_entry!r}")
    return vals, bnds


def chat(h: int, N: int, mu: float, kappa: float, tol: float = 1e-12) -> CertifiedValue:
    """Residue-class wrapped coefficient.

    chat(0) = sum over m != 0 of r(mN); for h != 0 the sum runs over all
    integers congruent to h mod N.  Weight gamma = 1.
    """
    if not 0 <= h < N:
        raise ValidationError(f"h={h} outside 0..{N - 1}")
    h = min(h, N - h) if h else 0
    if h == 0:
        T, Tb = _progression_sums(np.array([float(N)]), float(N), mu, kappa, 0, tol / 2)
        v = 2.0 * float(T[0])
        return CertifiedValue(v, 2.0 * float(Tb[0]) + EPS * v)
    T, Tb = _progression_sums(np.array([float(h), float(N - h)]), float(N), mu, kappa, 0, tol / 2)
    v = float(T[0] + T[1])
    return CertifiedValue(v, float(Tb[0] + Tb[1]) + EPS * v)


@dataclass(frozen=True, eq=False)
class FourierTable:
    """Wrapped coefficients chat(0..N-1) with per-entry certificates (gamma = 1)."""

    N: int
    mu: float
    kappa: float
    tol: float
    values: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        for name in ("values", "bounds"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.values.shape != (self.N,) or self.bounds.shape != (self.N,):
            raise ValidationError("table arrays must have length N")

    def __len__(self) -> int:
        return self.N

    def __getitem__(self, h: int) -> CertifiedValue:
        return CertifiedValue(float(self.values[h]), float(self.bounds[h]))

    @property
    def total_bound(self) -> float:
        return float(self.bounds.sum())

    def matches(self, N: int, mu: float, kappa: float) -> bool:
        return self.N == N and self.mu == float(mu) and self.kappa == float(kappa)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "mu": self.mu,
            "kappa": self.kappa,
            "tol": self.tol,
            "chat": [{"v": float(v), "b": float(b)} for v, b in zip(self.values, self.bounds)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "FourierTable":
        try:
            entries = d["chat"]
            return cls(
                N=int(d["N"]),
                mu=float(d["mu"]),
                kappa=float(d["kappa"]),
                tol=float(d["tol"]),
                values=np.array([e["v"] for e in entries], dtype=float),
                bounds=np.array([e["b"] for e in entries], dtype=float),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed table: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "FourierTable":
        return cls.from_dict(json.loads(text))


def build_fourier_table(
    N: int, mu: float, kappa: float, tol: float = 1e-10, *, require_prime: bool = True
) -> FourierTable:
    """Table of chat(h), h = 0..N-1, with every entry bound <= tol/N."""
    N = int(N)
    if require_prime and not is_prime(N):
        raise NonPrimeModulus(N)
    if N < 1:
        raise ValidationError("N must be >= 1")
    vals, bnds = _wrapped_arrays(N, float(mu), float(kappa), tol / N)
    return FourierTable(N, float(mu), float(kappa), float(tol), vals, bnds)


# -- disk cache ----------------------------------------------------------


def cache_key(N: int, mu: float, kappa: float, tol: float) -> str:
    raw = f"{int(N)}|{float(mu)!r}|{float(kappa)!r}|{float(tol)!r}"
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def default_cache_dir() -> Path | None:
    env = os.environ.get("CACHE_DIR")
    return Path(env) if env else None


def cached_fourier_table(
    N: int, mu: float, kappa: float, tol: float = 1e-10, cache_dir: str | Path | None = None
) -> FourierTable:
    """Load the table for the exact tuple (N, mu, kappa, tol) or build and store it."""
    if cache_dir is None:
        cache_dir = default_cache_dir()
    if cache_dir is None:
        return build_fourier_table(N, mu, kappa, tol)
    cache_dir = Path(cache_dir)
    path = cache_dir / f"chat_{cache_key(N, mu, kappa, tol)}.json"
    if path.exists():
        table = FourierTable.from_json(path.read_text())
        if table.matches(N, mu, kappa) and table.tol == float(tol):
            return table
    table = build_fourier_table(N, mu, kappa, tol)
    cache_dir.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(table.to_json())
    os.replace(tmp, path)
    return table
