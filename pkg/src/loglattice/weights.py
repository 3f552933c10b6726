"""Fourier-coefficient decay profiles of the function spaces.

Three families are supported, all of product form over coordinates:

* log-Korobov:   r(k) = gamma / (|k| * log(kappa*|k|)**mu)
* classical:     w(k) = gamma * |k|**(-2*alpha)
* iterated-log:  r_l(k) = gamma / (|k| * log_1(kappa|k|) ... log_{l-1}(kappa|k|)
                           * log_l(kappa|k|)**mu)

with value 1 at k = 0 in every case.  Logarithms of ``kappa * |k|`` are
formed as ``log(kappa) + log(|k|)`` so very large ``kappa`` does not
overflow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import numpy as np

from .errors import (
    DimensionExceeded,
    KappaTooSmall,
    KappaTooSmallForIteration,
    ValidationError,
)

E2 = math.e**2
KAPPA_MIN = math.exp(E2)


class Variant(str, Enum):
    LOG = "log"
    CLASSICAL = "classical"
    ITERATED = "iterated"


@dataclass(frozen=True)
class WeightParams:
    """Definition of a weighted space.

    Exactly one of ``gammas`` (explicit list) or ``gamma_power``
    (``gamma_j = j**-a``) must be given.
    """

    mu: float
    kappa: float
    gammas: tuple[float, ...] | None = None
    gamma_power: float | None = None
    variant: Variant = Variant.LOG
    alpha: float | None = None
    ell: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.gammas is not None:
            object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if (self.gammas is None) == (self.gamma_power is None):
            raise ValidationError("give exactly one of gammas or gamma_power")
        if not self.mu > 1:
            raise ValidationError(f"mu must be > 1, got {self.mu}")
        if not (self.kappa > 1 and math.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be a finite number > 1, got {self.kappa}")
        if self.gammas is not None:
            if len(self.gammas) == 0:
                raise ValidationError("gamma list is empty")
            if not all(g > 0 and math.isfinite(g) for g in self.gammas):
                raise ValidationError("all gamma_j must be positive and finite")
        if self.variant is Variant.CLASSICAL:
            if self.alpha is None or not self.alpha > 0.5:
                raise ValidationError(f"classical variant needs alpha > 1/2, got {self.alpha}")
        if self.variant is Variant.ITERATED:
            if self.ell is None or int(self.ell) != self.ell or self.ell < 1:
                raise ValidationError(f"iterated variant needs integer ell >= 1, got {self.ell}")
            object.__setattr__(self, "ell", int(self.ell))

    # -- weight sequence -------------------------------------------------

    @property
    def s_max(self) -> int | None:
        """Largest admissible dimension, or None for an unbounded rule."""
        return len(self.gammas) if self.gammas is not None else None

    def gamma(self, j: int) -> float:
        """Weight of coordinate ``j`` (1-based)."""
        if j < 1:
            raise ValidationError(f"coordinate index must be >= 1, got {j}")
        if self.gammas is not None:
            if j > len(self.gammas):
                raise DimensionExceeded(f"coordinate {j} exceeds s_max={len(self.gammas)}")
            return self.gammas[j - 1]
        return float(j) ** (-self.gamma_power)

    def gammas_upto(self, s: int) -> np.ndarray:
        if s < 0:
            raise ValidationError(f"dimension must be >= 0, got {s}")
        if self.gammas is not None:
            if s > len(self.gammas):
                raise DimensionExceeded(f"dimension {s} exceeds s_max={len(self.gammas)}")
            return np.array(self.gammas[:s], dtype=float)
        return np.arange(1, s + 1, dtype=float) ** (-self.gamma_power)

    def with_gammas(self, gammas: Sequence[float]) -> "WeightParams":
        return WeightParams(
            mu=self.mu,
            kappa=self.kappa,
            gammas=tuple(gammas),
            variant=self.variant,
            alpha=self.alpha,
            ell=self.ell,
        )

    # -- evaluation ------------------------------------------------------

    def weight(self, k: int, j: int) -> float:
        """Univariate weight of coordinate ``j`` at frequency ``k``."""
        g = self.gamma(j)
        if self.variant is Variant.LOG:
            return r_log(k, g, self.mu, self.kappa)
        if self.variant is Variant.CLASSICAL:
            return w_classical(k, g, self.alpha)
        return r_iterated(k, g, self.mu, self.kappa, self.ell)

    def unit_weight_array(self, kabs: np.ndarray) -> np.ndarray:
        """Weights with gamma = 1 on an array of |k| >= 1."""
        kabs = np.asarray(kabs, dtype=float)
        if self.variant is Variant.LOG:
            return _r_log_unit(kabs, self.mu, self.kappa)
        if self.variant is Variant.CLASSICAL:
            return kabs ** (-2.0 * self.alpha)
        return _r_iter_unit(kabs, self.mu, math.log(self.kappa), self.ell)

    def unit_tail_upper(self, K: int) -> float:
        """Upper bound on sum_{k > K} of the gamma = 1 weight (K >= 1).

        Uses the integral of the decreasing summand from K to infinity.
        """
        if K < 1:
            raise ValidationError("tail start must be >= 1")
        if self.variant is Variant.CLASSICAL:
            a2 = 2.0 * self.alpha
            return K ** (1.0 - a2) / (a2 - 1.0)
        if self.variant is Variant.LOG:
            L = math.log(self.kappa) + math.log(K)
            return L ** (1.0 - self.mu) / (self.mu - 1.0)
        L = iterated_log(math.log(self.kappa) + math.log(K), self.ell - 1)
        return L ** (1.0 - self.mu) / (self.mu - 1.0)

    def vec(self, k: Sequence[int]) -> float:
        """Product weight of an integer vector (any variant)."""
        if self.s_max is not None and len(k) > self.s_max:
            raise DimensionExceeded(f"vector length {len(k)} exceeds s_max={self.s_max}")
        out = 1.0
        for j, kj in enumerate(k, start=1):
            if kj != 0:
                out *= self.weight(kj, j)
        return out

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        if self.gammas is not None:
            gam: dict[str, Any] = {"list": list(self.gammas)}
        else:
            gam = {"power": self.gamma_power}
        if self.variant is Variant.LOG:
            var: Any = "log"
        elif self.variant is Variant.CLASSICAL:
            var = {"classical": self.alpha}
        else:
            var = {"iterated": self.ell}
        return {"mu": self.mu, "kappa": self.kappa, "gammas": gam, "variant": var}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "WeightParams":
        if not isinstance(d, dict):
            raise ValidationError("weight params must be a JSON object")
        allowed = {"mu", "kappa", "gammas", "variant"}
        unknown = set(d) - allowed
        if unknown:
            raise ValidationError(f"unknown fields: {sorted(unknown)}")
        missing = {"mu", "kappa", "gammas"} - set(d)
        if missing:
            raise ValidationError(f"missing fields: {sorted(missing)}")
        gam = d["gammas"]
        if not isinstance(gam, dict) or len(gam) != 1 or set(gam) - {"list", "power"}:
            raise ValidationError('gammas must be {"list": [...]} or {"power": a}')
        kw: dict[str, Any] = {}
        if "list" in gam:
            kw["gammas"] = tuple(gam["list"])
        else:
            kw["gamma_power"] = float(gam["power"])
        var = d.get("variant", "log")
        if var == "log":
            kw["variant"] = Variant.LOG
        elif isinstance(var, dict) and len(var) == 1 and "classical" in var:
            kw["variant"] = Variant.CLASSICAL
            kw["alpha"] = float(var["classical"])
        elif isinstance(var, dict) and len(var) == 1 and "iterated" in var:
            kw["variant"] = Variant.ITERATED
            kw["ell"] = var["iterated"]
        else:
            raise ValidationError(f"unrecognised variant {var!r}")
        try:
            return cls(mu=float(d["mu"]), kappa=float(d["kappa"]), **kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "WeightParams":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(d)


def required_kappa(gamma: float, mu: float) -> float:
    """Smallest kappa admissible for a coordinate with weight ``gamma``."""
    return max(KAPPA_MIN, math.exp(E2 * gamma ** (1.0 / mu)))


def validate_kappa(params: WeightParams, s: int | None = None) -> None:
    """Raise :class:`KappaTooSmall` unless kappa >= max(exp(e^2), exp(e^2 gamma_j^(1/mu))).

    The check runs over j = 1..s (default: the whole list, or for a power
    rule its supremum, which needs ``s`` when the weights grow).
    """
    if s is None:
        if params.s_max is not None:
            s = params.s_max
        elif params.gamma_power >= 0:
            s = 1  # decreasing rule: gamma_1 = 1 is the supremum
        else:
            raise ValidationError("increasing weight rule needs an explicit dimension s")
    for j in range(1, s + 1):
        need = required_kappa(params.gamma(j), params.mu)
        if params.kappa < need:
            raise KappaTooSmall(j, need, params.kappa)
    if params.variant is Variant.ITERATED:
        check_iterated_kappa(params.kappa, params.ell)


def iterated_log(x: float, i: int) -> float:
    """log applied ``i`` times to x (``i = 0`` returns x)."""
    for _ in range(i):
        x = math.log(x)
    return x


def check_iterated_kappa(kappa: float, ell: int, log_kappa: float | None = None) -> None:
    lk = math.log(kappa) if log_kappa is None else log_kappa
    x = lk
    for i in range(1, ell + 1):
        if not x > 1:
            raise KappaTooSmallForIteration(
                f"log_{i}(kappa) = {x!r} <= 1; kappa too small for ell={ell}"
            )
        if i < ell:
            x = math.log(x)


def r_log(k: int, gamma: float, mu: float, kappa: float) -> float:
    if k == 0:
        return 1.0
    a = abs(k)
    return gamma / (a * (math.log(kappa) + math.log(a)) ** mu)


def _r_log_unit(kabs: np.ndarray, mu: float, kappa: float) -> np.ndarray:
    return 1.0 / (kabs * (math.log(kappa) + np.log(kabs)) ** mu)


def r_log_vec(k: Sequence[int], params: WeightParams) -> float:
    """Product-form log-Korobov weight of an integer vector."""
    if params.s_max is not None and len(k) > params.s_max:
        raise DimensionExceeded(f"vector length {len(k)} exceeds s_max={params.s_max}")
    out = 1.0
    for j, kj in enumerate(k, start=1):
        if kj != 0:
            out *= r_log(kj, params.gamma(j), params.mu, params.kappa)
    return out


def w_classical(k: int, gamma: float, alpha: float) -> float:
    if k == 0:
        return 1.0
    return gamma * abs(k) ** (-2.0 * alpha)


def r_iterated(
    k: int,
    gamma: float,
    mu: float,
    kappa: float | None,
    ell: int,
    *,
    log_kappa: float | None = None,
) -> float:
    """Iterated-log weight; pass ``log_kappa`` when kappa itself overflows.

    The leading factor is |k| (not kappa|k|), so ``ell = 1`` coincides with
    :func:`r_log`.
    """
    if k == 0:
        return 1.0
    lk = math.log(kappa) if log_kappa is None else log_kappa
    check_iterated_kappa(kappa if kappa is not None else math.inf, ell, log_kappa=lk)
    a = abs(k)
    x = lk + math.log(a)  # log_1(kappa |k|)
    denom = float(a)
    for _ in range(1, ell):
        denom *= x
        x = math.log(x)
    return gamma / (denom * x**mu)


def _r_iter_unit(kabs: np.ndarray, mu: float, log_kappa: float, ell: int) -> np.ndarray:
    x = log_kappa + np.log(kabs)
    denom = kabs.copy()
    for _ in range(1, ell):
        denom = denom * x
        x = np.log(x)
    return 1.0 / (denom * x**mu)
