"""Log-scale Jensen machinery and the error bounds built on it.

With c = mu (1 - lambda) and knot z0 = exp(-2 mu):

    psi(z) = z log(1/z)^c                        on (0, 1]
    phi(z) = 0 | psi(z) | linear continuation    for z = 0 | z <= z0 | z > z0

phi is the concave stand-in for z -> z^lambda.  Everything else here (the
domination constant D, the series constant C, the dimension factor T_d, the
CBC error bound, the Korobov transfer constant tau and the tractability
diagnostics) is expressed through it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import IO, Callable, Sequence

import numpy as np

from .emsum import CertifiedValue, log_series_sum
from .errors import DomainError, ValidationError
from .weights import WeightParams, required_kappa, validate_kappa


@dataclass(frozen=True)
class BoundParams:
    lam: float
    mu: float
    kappa: float

    def __post_init__(self):
        for name in ("lam", "mu", "kappa"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not self.mu > 1:
            raise ValidationError(f"mu must be > 1, got {self.mu}")
        if not (1.0 / self.mu < self.lam <= 1.0):
            raise ValidationError(f"lambda={self.lam} outside (1/mu, 1] for mu={self.mu}")
        if not self.kappa > 1:
            raise ValidationError(f"kappa must be > 1, got {self.kappa}")

    @property
    def expo(self) -> float:
        """The log exponent c = mu (1 - lambda)."""
        return self.mu * (1.0 - self.lam)

    @property
    def knot(self) -> float:
        return math.exp(-2.0 * self.mu)

    @property
    def knot_value(self) -> float:
        """psi(e^{-2 mu}) = e^{-2 mu} (2 mu)^c."""
        return self.knot * (2.0 * self.mu) ** self.expo

    @property
    def knot_slope(self) -> float:
        """psi'(e^{-2 mu}) = ((lambda + 1)/2) (2 mu)^c."""
        return 0.5 * (self.lam + 1.0) * (2.0 * self.mu) ** self.expo

    @classmethod
    def for_params(cls, lam: float, params: WeightParams) -> "BoundParams":
        return cls(lam, params.mu, params.kappa)


# -- psi / phi -------------------------------------------------------------


def psi(z, bp: BoundParams):
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)) or np.any(z > 1):
        raise DomainError("psi is defined on (0, 1]")
    out = z * (-np.log(z)) ** bp.expo
    return float(out) if out.ndim == 0 else out


def _phi_scalar(z: float, bp: BoundParams) -> float:
    if not z >= 0:
        raise DomainError("phi is defined on [0, inf)")
    if z == 0:
        return 0.0
    z0 = bp.knot
    if z <= z0:
        return z * (-math.log(z)) ** bp.expo
    return (z - z0) * bp.knot_slope + bp.knot_value


def phi(z, bp: BoundParams):
    if isinstance(z, (float, int)):
        return _phi_scalar(float(z), bp)
    z = np.asarray(z, dtype=float)
    if np.any(~(z >= 0)):
        raise DomainError("phi is defined on [0, inf)")
    z0 = bp.knot
    inner = np.where(z > 0, np.minimum(z, z0), z0)  # placeholder at 0 keeps log finite
    curved = inner * (-np.log(inner)) ** bp.expo
    linear = (z - z0) * bp.knot_slope + bp.knot_value
    out = np.where(z == 0, 0.0, np.where(z <= z0, curved, linear))
    return float(out) if out.ndim == 0 else out


def phi_inv_upper(y: float, bp: BoundParams) -> float:
    """y / log(1/y)^c, an upper bound on the inverse of phi.

    Admissible for 0 < y <= psi(e^{-2 mu}) and y < 1 (the bound needs
    log(1/y) > 0, which the knot condition alone does not ensure for large mu).
    """
    y = float(y)
    if not (0 < y <= bp.knot_value):
        raise DomainError(f"y={y} outside (0, {bp.knot_value}]")
    if y >= 1.0:
        raise DomainError(f"y={y} >= 1 gives a non-positive log(1/y)")
    return y / (-math.log(y)) ** bp.expo


def phi_inv_numeric(y: float, bp: BoundParams) -> float:
    """Exact inverse of phi by bisection (phi is strictly increasing)."""
    y = float(y)
    if not y >= 0:
        raise DomainError("phi^{-1} needs y >= 0")
    if y == 0:
        return 0.0
    lo, hi = 0.0, bp.knot
    while phi(hi, bp) < y:
        lo, hi = hi, 2.0 * hi
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid, bp) < y:
            lo = mid
        else:
            hi = mid
    return hi if abs(phi(hi, bp) - y) <= abs(phi(lo, bp) - y) else lo


def jensen_general(phi_fn: Callable[[float], float], a: Sequence[float], form: str = "finite"):
    """Both sides of the generalised Jensen inequality.

    ``finite``:   (n-1) phi(0) + phi(sum a)  <=  sum phi(a_k)
    ``infinite``: phi(sum a)                <=  sum phi(a_k)   (phi(0) >= 0)
    Returns (lhs, rhs).
    """
    a = [float(x) for x in a]
    if any(not x >= 0 for x in a):
        raise DomainError("sequence entries must be non-negative")
    total = math.fsum(a)
    rhs = math.fsum(phi_fn(x) for x in a)
    if form == "finite":
        lhs = (len(a) - 1) * phi_fn(0.0) + phi_fn(total)
    elif form == "infinite":
        if phi_fn(0.0) < 0:
            raise DomainError("the infinite form needs phi(0) >= 0")
        lhs = phi_fn(total)
    else:
        raise ValidationError(f"unknown form {form!r}")
    return lhs, rhs


# -- constants -------------------------------------------------------------


def D_const(bp: BoundParams) -> float:
    """(3 mu)^c, read off the chain log(gamma^-1 |k| log(kappa|k|)^mu) <= 3 mu max(1, log gamma^-1) log(kappa|k|)."""
    return (3.0 * bp.mu) ** bp.expo


def C_const(bp: BoundParams, tol: float = 1e-12) -> CertifiedValue:
    """D * sum_{k>=1} 1/(k log(kappa k)^(mu lambda))."""
    z = log_series_sum(bp.mu * bp.lam, bp.kappa, 1, tol)
    D = D_const(bp)
    return CertifiedValue(D * z.value, D * z.bound * (1 + 1e-15) + 4e-16 * D * z.value)


def _log_factor(gamma, bp: BoundParams):
    g = np.asarray(gamma, dtype=float)
    return np.maximum(1.0, np.log(1.0 / g)) ** bp.expo


def lemma3_bound(k: int, gamma: float, bp: BoundParams) -> float:
    """gamma D max(1, log 1/gamma)^c / (|k| log(kappa |k|)^(mu lambda)); dominates phi(r(k))."""
    k = int(k)
    if k == 0:
        raise DomainError("k must be nonzero")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if bp.kappa < required_kappa(gamma, bp.mu):
        raise DomainError(f"kappa={bp.kappa} below the admissible minimum for gamma={gamma}")
    ak = abs(k)
    lk = math.log(bp.kappa) + math.log(ak)
    return gamma * D_const(bp) * float(_log_factor(gamma, bp)) / (ak * lk ** (bp.mu * bp.lam))


def _check_match(params: WeightParams, bp: BoundParams) -> None:
    if params.mu != bp.mu or params.kappa != bp.kappa:
        raise ValidationError("weight parameters and bound parameters disagree on mu or kappa")


def T_d(d: int, params: WeightParams, bp: BoundParams, C: CertifiedValue | None = None) -> float:
    """3 prod_{j<=d} (1 + 2 C gamma_j max(1, log 1/gamma_j)^c), with C at its certified upper end."""
    _check_match(params, bp)
    if d < 0:
        raise ValidationError("d must be >= 0")
    if d == 0:
        return 3.0
    Cv = (C or C_const(bp)).hi
    g = params.gammas_upto(d)
    return 3.0 * float(np.prod(1.0 + 2.0 * Cv * g * _log_factor(g, bp)))


def N_min_precondition(T: float, bp: BoundParams) -> float:
    """Smallest N for which the CBC bound applies: e^{2 mu} (2 mu)^{-c} T."""
    return math.exp(2.0 * bp.mu) * (2.0 * bp.mu) ** (-bp.expo) * T


@dataclass(frozen=True)
class PreconditionFailed:
    """Marker: N is below the size for which the bound is established."""

    N: int
    N_min: float

    def __bool__(self) -> bool:
        return False


def rate_bound(N: float, T: float, bp: BoundParams) -> float | PreconditionFailed:
    """T / (N log(N/T)^c) when N >= N_min_precondition(T), else the marker."""
    nmin = N_min_precondition(T, bp)
    if N < nmin:
        return PreconditionFailed(int(N), nmin)
    return T / (N * math.log(N / T) ** bp.expo)


def thm1_bound(N: int, d: int, params: WeightParams, bp: BoundParams, C: CertifiedValue | None = None):
    """Guaranteed bound on the squared error of the CBC vector in dimension d."""
    validate_kappa(params, d)
    return rate_bound(N, T_d(d, params, bp, C), bp)


@dataclass(frozen=True)
class BoundReport:
    N: int
    d: int
    lam: float
    T_d: float
    thm1_rhs: float | None  # None when the precondition fails
    N_min_precondition: float
    C_const: CertifiedValue
    D_const: float
    transfer: dict | None = None

    @property
    def precondition_ok(self) -> bool:
        return self.thm1_rhs is not None

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "d": self.d,
            "lambda": self.lam,
            "T_d": self.T_d,
            "thm1_rhs": self.thm1_rhs if self.thm1_rhs is not None else "precondition-failed",
            "N_min_precondition": self.N_min_precondition,
            "C_const": {"value": self.C_const.value, "bound": self.C_const.bound},
            "D_const": self.D_const,
        }
        if self.transfer is not None:
            out["transfer"] = self.transfer
        return out


def bound_report(N: int, d: int, params: WeightParams, bp: BoundParams) -> BoundReport:
    validate_kappa(params, d)
    C = C_const(bp)
    T = T_d(d, params, bp, C)
    rhs = rate_bound(N, T, bp)
    return BoundReport(
        N=N,
        d=d,
        lam=bp.lam,
        T_d=T,
        thm1_rhs=None if isinstance(rhs, PreconditionFailed) else rhs,
        N_min_precondition=N_min_precondition(T, bp),
        C_const=C,
        D_const=D_const(bp),
    )


def lambda_sweep(N: int, d: int, params: WeightParams, lams: Sequence[float]):
    """Reports for each lambda and the index of the tightest valid bound (None if none apply)."""
    reports = [bound_report(N, d, params, BoundParams.for_params(l, params)) for l in lams]
    valid = [(r.thm1_rhs, i) for i, r in enumerate(reports) if r.thm1_rhs is not None]
    best = min(valid)[1] if valid else None
    return reports, best


# -- transfer to the classical Korobov space ------------------------------


def tau(mu: float, alpha: float, kappa: float, lam2: float) -> float:
    """max{(log kappa)^mu, (mu / (2 lambda alpha - 1))^mu}."""
    if not alpha > 0.5:
        raise DomainError(f"alpha must be > 1/2, got {alpha}")
    if not (0 < lam2 <= 1) or not 2.0 * lam2 * alpha > 1:
        raise DomainError(f"lambda={lam2} outside (1/(2 alpha), 1]")
    return max(math.log(kappa) ** mu, (mu / (2.0 * lam2 * alpha - 1.0)) ** mu)


def thm2_transfer(e2_log: float, lam2: float) -> float:
    """Bound on the classical error e (not e^2): e2_log^(1/(2 lambda))."""
    if not e2_log >= 0:
        raise DomainError("squared error must be non-negative")
    if not 0 < lam2 <= 1:
        raise DomainError(f"lambda={lam2} outside (0, 1]")
    return e2_log ** (1.0 / (2.0 * lam2))


def scaled_weights(gammas: Sequence[float], lam2: float, t: float) -> tuple[float, ...]:
    """gamma_j^lambda * tau: the log-space weights whose error dominates the classical one."""
    return tuple(float(g) ** lam2 * t for g in gammas)


def corollary_weights(gammas: Sequence[float], lam2: float, t: float) -> tuple[float, ...]:
    """gamma_j^(1/lambda) / tau^(1/lambda): classical weights covered by a log-space CBC run."""
    return tuple((float(g) / t) ** (1.0 / lam2) for g in gammas)


def corollary_bound(N: int, d: int, params: WeightParams, bp_log: BoundParams, lam2: float):
    """(CBC bound)^(1/(2 lambda)) on the classical error of the log-space CBC vector."""
    b = thm1_bound(N, d, params, bp_log)
    if isinstance(b, PreconditionFailed):
        return b
    return thm2_transfer(b, lam2)


# -- tractability diagnostics ---------------------------------------------

TRACT_COLUMNS = ("s", "sum_gamma", "sum_over_logs", "sum_over_s", "Gamma_partial")


@dataclass
class TractReport:
    rows: list[dict] = field(default_factory=list)
    lam: float = 1.0
    C: CertifiedValue | None = None
    N: int | None = None

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACT_COLUMNS)
        for r in self.rows:
            w.writerow([r["s"]] + [repr(float(r[c])) for c in TRACT_COLUMNS[1:]])

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.N,
            "C_const": None if self.C is None else {"value": self.C.value, "bound": self.C.bound},
            "rows": [{k: (v if not isinstance(v, float) or math.isfinite(v) else str(v)) for k, v in r.items()} for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def read_tract_csv(fh: IO[str]) -> list[dict]:
    out = []
    for row in csv.DictReader(fh):
        d = {"s": int(row["s"])}
        for c in TRACT_COLUMNS[1:]:
            d[c] = float(row[c])
        out.append(d)
    return out


def tractability_report(
    gammas: WeightParams | Sequence[float] | np.ndarray,
    s_grid: Sequence[int],
    bp: BoundParams | None = None,
    N: int | None = None,
) -> TractReport:
    """Finite diagnostic sequences for the tractability conditions.

    Per s in ``s_grid``: partial sums of gamma, the same divided by log s and
    by s, and partial sums of Gamma = sum gamma_j max(1, log 1/gamma_j)^c.
    With ``bp`` and ``N`` given, each row also carries B_s = 3 exp(2 C Gamma_s)
    (an upper bound on T_s) and the rate bound built from it.
    These are diagnostics only: the conditions themselves are limits.
    """
    s_grid = sorted(set(int(s) for s in s_grid))
    if not s_grid or s_grid[0] < 1:
        raise ValidationError("s grid must contain positive integers")
    smax = s_grid[-1]
    if isinstance(gammas, WeightParams):
        g = gammas.gammas_upto(smax)
    else:
        g = np.asarray(gammas, dtype=float)[:smax]
        if g.size < smax:
            raise ValidationError(f"need {smax} weights, got {g.size}")
    if np.any(~(g > 0)):
        raise ValidationError("weights must be positive")
    lam = bp.lam if bp is not None else 1.0
    expo = bp.expo if bp is not None else 0.0
    csum = np.cumsum(g)
    gsum = np.cumsum(g * np.maximum(1.0, np.log(1.0 / g)) ** expo)
    C = C_const(bp) if bp is not None else None
    rep = TractReport(lam=lam, C=C, N=N)
    for s in s_grid:
        row = {
            "s": s,
            "sum_gamma": float(csum[s - 1]),
            "sum_over_logs": float(csum[s - 1]) / math.log(s) if s > 1 else math.inf,
            "sum_over_s": float(csum[s - 1]) / s,
            "Gamma_partial": float(gsum[s - 1]),
        }
        if C is not None:
            B = 3.0 * math.exp(2.0 * C.hi * row["Gamma_partial"])
            row["B"] = B
            if N is not None:
                rb = rate_bound(N, B, bp)
                row["rate_bound"] = None if isinstance(rb, PreconditionFailed) else rb
        rep.rows.append(row)
    return rep
