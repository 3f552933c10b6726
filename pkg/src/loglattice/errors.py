"""Exception hierarchy.

Every error raised by the package derives from :class:`LatticeError`.  The
CLI maps the four families below onto distinct exit codes.
"""

from __future__ import annotations


class LatticeError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(LatticeError, ValueError):
    """Inputs violate a documented precondition."""

    exit_code = 2


class BudgetExceeded(LatticeError):
    """A brute-force or exhaustive computation would exceed its work cap."""

    exit_code = 3


class TolUnreachable(LatticeError):
    """A requested certified tolerance cannot be met within the term budget."""

    exit_code = 4


class KappaTooSmall(ValidationError):
    def __init__(self, j: int, required: float, kappa: float):
        self.j = j
        self.required = required
        self.kappa = kappa
        super().__init__(
            f"kappa={kappa!r} too small for coordinate j={j}: need kappa >= {required!r}"
        )


class KappaTooSmallForIteration(ValidationError):
    pass


class DimensionExceeded(ValidationError):
    pass


class NonPrimeModulus(ValidationError):
    def __init__(self, N: int):
        self.N = N
        super().__init__(f"modulus N={N} is not prime")


class TableMismatch(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class ParamOutOfRange(ValidationError):
    pass


class AlreadyTransformed(ValidationError):
    pass


class OutOfTable(ValidationError):
    pass
