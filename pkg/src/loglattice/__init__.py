"""Rank-1 lattice rules for log-Korobov spaces.

Weights, certified series evaluation, worst-case error engines, the
component-by-component construction, error bounds and point sets.
"""

from .bounds import BoundParams, thm1_bound, tractability_report
from .cbc import CbcTrace, cbc_construct, cbc_exhaustive_check
from .emsum import CertifiedValue, FourierTable, build_fourier_table, chat, log_series_sum
from .errors import LatticeError
from .points import PointSet, lattice_points, qmc_integrate, tent_transform
from .wce import ErrorResult, LatticeRule, wce_bruteforce, wce_classical, wce_cosine_tent, wce_spectral
from .weights import WeightParams

__version__ = "0.1.0"

__all__ = [
    "BoundParams",
    "CbcTrace",
    "CertifiedValue",
    "ErrorResult",
    "FourierTable",
    "LatticeError",
    "LatticeRule",
    "PointSet",
    "WeightParams",
    "build_fourier_table",
    "cbc_construct",
    "cbc_exhaustive_check",
    "chat",
    "lattice_points",
    "log_series_sum",
    "qmc_integrate",
    "tent_transform",
    "thm1_bound",
    "tractability_report",
    "wce_bruteforce",
    "wce_classical",
    "wce_cosine_tent",
    "wce_spectral",
]
