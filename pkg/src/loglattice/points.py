"""Lattice point sets, the tent transform, QMC averages and reference integrands."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, TYPE_CHECKING, Callable, Sequence

import numpy as np

from .emsum import EPS, CertifiedValue, log_series_sum, residue_class_sums
from .errors import AlreadyTransformed, BudgetExceeded, TolUnreachable, ValidationError
from .weights import Variant, WeightParams

if TYPE_CHECKING:
    from .wce import LatticeRule

KERNEL_CAP = 10**8
ABEL_MAX_LOG2 = 26


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray  # shape (N, s)
    transformed: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValidationError("points must be a 2-d array")
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ValidationError("point coordinates must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def s(self) -> int:
        return self.points.shape[1]


def lattice_points(rule: "LatticeRule") -> PointSet:
    """x_n = (n g mod N) / N, integer arithmetic followed by one division."""
    n = np.arange(rule.N, dtype=np.int64)[:, None]
    g = np.asarray(rule.g, dtype=np.int64)[None, :]
    return PointSet(((n * g) % rule.N) / rule.N, False)


def rho(x):
    """Tent map 1 - |2x - 1|."""
    return 1.0 - np.abs(2.0 * np.asarray(x, dtype=float) - 1.0)


def tent_transform(ps: PointSet) -> PointSet:
    if ps.transformed:
        raise AlreadyTransformed("point set is already tent-transformed")
    return PointSet(rho(ps.points), True)


def sigma(k: int, x):
    """Half-period cosine basis: 1 for k = 0, sqrt(2) cos(k pi x) otherwise."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.ones_like(x)
    return math.sqrt(2.0) * np.cos(k * np.pi * x)


def qmc_integrate(f: Callable, ps: PointSet, sequential: bool = True, threads: int = 4):
    """Equal-weight average (1/N) sum_n f(x_n), accumulated in n-order.

    With ``sequential=False`` the integrand is evaluated on a thread pool;
    the reduction order is unchanged, so the result is identical.
    """
    rows = list(ps.points)
    if sequential:
        vals = [f(x) for x in rows]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(f, rows))
    if any(isinstance(v, complex) or np.iscomplexobj(v) for v in vals):
        re = math.fsum(complex(v).real for v in vals)
        im = math.fsum(complex(v).imag for v in vals)
        return complex(re, im) / ps.N
    return math.fsum(float(v) for v in vals) / ps.N


def write_points(ps: PointSet, fh: IO[str]) -> None:
    for row in ps.points:
        fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_points(fh: IO[str], transformed: bool = False) -> PointSet:
    rows = [[float(t) for t in line.split()] for line in fh if line.strip()]
    return PointSet(np.array(rows, dtype=float).reshape(len(rows), -1), transformed)


# -- the non-Hoelder reference function ----------------------------------
#
# f(x) = sum_{k >= 1} cos(2 pi k x) / (k (log kappa k)^mu)


def _unit_r(k: np.ndarray, mu: float, kappa: float) -> np.ndarray:
    return 1.0 / (k * (math.log(kappa) + np.log(k)) ** mu)


def nonholder_f(x: float, mu: float, kappa: float, tol: float = 1e-8) -> CertifiedValue:
    """Certified value of f(x).

    Integer x reduces to the plain log series.  Otherwise the partial sum
    runs to the smallest power of two K whose Abel tail bound
    r(K+1) / |sin(pi x)| is at most tol/2.
    """
    if not mu > 1:
        raise ValidationError(f"mu must be > 1, got {mu}")
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"x={x} outside [0, 1]")
    if x in (0.0, 1.0):
        return log_series_sum(mu, kappa, 1, tol)
    sin = abs(math.sin(math.pi * x))
    K = 1
    for _ in range(ABEL_MAX_LOG2 + 1):
        tail = float(_unit_r(np.array([K + 1.0]), mu, kappa)[0]) / sin
        if tail <= tol / 2:
            break
        K *= 2
    else:
        raise TolUnreachable(f"f({x}) needs more than 2^{ABEL_MAX_LOG2} terms for tol={tol}")
    partials = []
    rsum = 0.0
    for start in range(1, K + 1, 1 << 20):
        k = np.arange(start, min(start + (1 << 20), K + 1), dtype=float)
        r = _unit_r(k, mu, kappa)
        partials.append(float(np.sum(r * np.cos(2.0 * np.pi * np.mod(k * x, 1.0)))))
        rsum += float(np.sum(r * (k + 4.0)))
    value = math.fsum(partials)
    rounding = 8.0 * EPS * rsum
    bound = tail + rounding
    if bound > tol:
        raise TolUnreachable(f"rounding allowance pushes f({x}) bound to {bound}")
    return CertifiedValue(value, bound)


def nonholder_grid(m: int, mu: float, kappa: float, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """f(j/m) for j = 0..m-1 with per-value certified bounds.

    Folds the series by residue class mod m:
    f(j/m) = sum_{a=1}^{m} T(a) cos(2 pi a j / m), T(a) = sum_l r(a + m l).
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    T, Tb = residue_class_sums(m, mu, kappa, tol / (4 * m))
    # a = m contributes T(m) at every j; the others through a DFT
    coeffs = np.zeros(m)
    coeffs[0] = T[m - 1]
    coeffs[1:] = T[: m - 1]
    vals = np.fft.fft(coeffs).real
    err = float(Tb.sum()) + 32 * EPS * (math.ceil(math.log2(max(m, 2))) + 1) * float(T.sum())
    if err > tol:
        raise TolUnreachable(f"grid bound {err} exceeds tolerance {tol}")
    return vals, np.full(m, err)


def nonholder_drop(m: int, mu: float, kappa: float, tol: float = 1e-8) -> CertifiedValue:
    """f(0) - f(1/m) = sum_{a=1}^{m-1} T(a) (1 - cos(2 pi a / m)), each term >= 0."""
    if m < 2:
        raise ValidationError("m must be >= 2")
    T, Tb = residue_class_sums(m, mu, kappa, tol / (4 * m))
    a = np.arange(1, m, dtype=float)
    w = 2.0 * np.sin(np.pi * a / m) ** 2  # 1 - cos(2 pi a/m) without cancellation
    terms = T[: m - 1] * w
    value = math.fsum(terms)
    bound = float(np.sum(Tb[: m - 1] * w)) + 8 * EPS * value
    if bound > tol:
        raise TolUnreachable(f"drop bound {bound} exceeds tolerance {tol}")
    return CertifiedValue(value, bound)


def nonholder_norm(mu: float, kappa: float, tol: float = 1e-12) -> CertifiedValue:
    """Norm of f in the unit-weight log-Korobov space: sqrt((1/2) sum_k r(k)).

    The returned bound makes ``hi`` a valid upper bound on the true norm.
    """
    z = log_series_sum(mu, kappa, 1, tol)
    v = math.sqrt(0.5 * z.value)
    hi = math.sqrt(0.5 * z.hi) * (1 + 4 * EPS)
    return CertifiedValue(v, hi - v)


def figure_samples(n: int = 2048, mu: float = 1.5, kappa: float | None = None, tol: float = 1e-8):
    """(x, f(x), bound) at x = i/n, i = 0..n-1."""
    if kappa is None:
        kappa = math.exp(math.e**2)
    vals, bnds = nonholder_grid(n, mu, kappa, tol)
    x = np.arange(n) / n
    return x, vals, bnds


# -- truncated kernels ---------------------------------------------------


def _coord_sums(params: WeightParams, Kmax: int, s: int):
    if Kmax < 1:
        raise ValidationError("Kmax must be >= 1")
    if Kmax * s > KERNEL_CAP:
        raise BudgetExceeded(f"kernel truncation Kmax*s = {Kmax * s} exceeds cap")
    k = np.arange(1, Kmax + 1, dtype=float)
    w = params.unit_weight_array(k)
    if params.variant is Variant.LOG:
        tail = log_series_sum(params.mu, params.kappa, Kmax + 1, 1e-13).hi
    else:
        tail = params.unit_tail_upper(Kmax)
    return k, w, tail


def _certified_product(factors: list[float], deltas: list[float], Kmax: int, wsum: float) -> CertifiedValue:
    absf = np.abs(factors)
    up = float(np.prod(absf + np.asarray(deltas)))
    value = float(np.prod(factors))
    bound = up - float(np.prod(absf)) + 4 * len(factors) * (Kmax + 4) * EPS * up
    return CertifiedValue(value, bound)


def kernel_eval_log(x: Sequence[float], y: Sequence[float], params: WeightParams, Kmax: int) -> CertifiedValue:
    """prod_j (1 + 2 gamma_j sum_{k=1}^{Kmax} r(k) cos(2 pi k (x_j - y_j)))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x.size
    gam = params.gammas_upto(s)
    k, w, tail = _coord_sums(params, Kmax, s)
    facs, dels = [], []
    for j in range(s):
        d = np.mod(x[j] - y[j], 1.0)
        c = float(np.sum(w * np.cos(2.0 * np.pi * np.mod(k * d, 1.0))))
        facs.append(1.0 + 2.0 * gam[j] * c)
        dels.append(2.0 * gam[j] * tail)
    return _certified_product(facs, dels, Kmax, float(w.sum()))


def kernel_eval_cosine(x: Sequence[float], y: Sequence[float], params: WeightParams, Kmax: int) -> CertifiedValue:
    """prod_j (1 + gamma_j sum_{k=1}^{Kmax} r(k) sigma_k(x_j) sigma_k(y_j)); k = 0 gives the 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x.size
    gam = params.gammas_upto(s)
    k, w, tail = _coord_sums(params, Kmax, s)
    facs, dels = [], []
    for j in range(s):
        c = float(np.sum(w * 2.0 * np.cos(np.pi * k * x[j]) * np.cos(np.pi * k * y[j])))
        facs.append(1.0 + gam[j] * c)
        dels.append(2.0 * gam[j] * tail)
    return _certified_product(facs, dels, Kmax, float(w.sum()))
