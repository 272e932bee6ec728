"""Sign + log10-of-magnitude arithmetic for quantities far outside float range.

Bound tables in this package involve numbers like 10^(-188909).  A
LogMagnitude stores the sign and log10 of the absolute value, the latter at a
fixed 60 decimal digits: exponents up to ~10^6 never need more mantissa
accuracy than the tables print.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import mpmath
from mpmath import mpf

from .precision import DomainError, NumericsError, digits_to_bits, local_precision

LOG_DIGITS = 60
_LOG_BITS = digits_to_bits(LOG_DIGITS)


class CancellationError(NumericsError):
    """Signed log-domain addition would cancel catastrophically."""


def _log_mpf(x) -> mpf:
    with local_precision(_LOG_BITS):
        return mpf(x) + mpf(0)


@dataclass(frozen=True)
class LogMagnitude:
    """sign in {-1, 0, +1}; log10_abs meaningless when sign == 0."""

    sign: int
    log10_abs: mpf = mpf(0)

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or +1, got {self.sign}")
        object.__setattr__(self, "log10_abs", _log_mpf(self.log10_abs))

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "LogMagnitude":
        return cls(0)

    @classmethod
    def from_number(cls, x) -> "LogMagnitude":
        """From any real/complex value (complex: magnitude with sign +1)."""
        if isinstance(x, mpmath.mpc):
            if x == 0:
                return cls.zero()
            with local_precision(_LOG_BITS):
                return cls(1, mpmath.log10(abs(x)))
        x = mpmath.mpf(x) if not isinstance(x, mpf) else x
        if x == 0:
            return cls.zero()
        with local_precision(_LOG_BITS):
            return cls(1 if x > 0 else -1, mpmath.log10(abs(x)))

    @classmethod
    def from_log10(cls, sign: int, log10_abs) -> "LogMagnitude":
        return cls(sign, _log_mpf(log10_abs))

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return self.sign == 0

    def to_number(self):
        """Back to mpf at current mpmath precision.  Only legal when the
        exponent fits the working range (it always does for mpmath, but a
        |log10| beyond ~10^17 would lose all mantissa information)."""
        if self.sign == 0:
            return mpf(0)
        if abs(self.log10_abs) > mpf(10) ** (LOG_DIGITS - 5):
            raise DomainError("log magnitude too large to convert to a number")
        return self.sign * mpmath.power(mpf(10), self.log10_abs)

    def abs(self) -> "LogMagnitude":
        return LogMagnitude(abs(self.sign), self.log10_abs)

    def negate(self) -> "LogMagnitude":
        return LogMagnitude(-self.sign, self.log10_abs)

    @property
    def exponent(self) -> int:
        """Decimal exponent E with mantissa in [1, 10): x = m * 10^E."""
        if self.sign == 0:
            raise DomainError("zero has no decimal exponent")
        return int(mpmath.floor(self.log10_abs))

    @property
    def mantissa(self) -> float:
        """Mantissa in [1, 10) (float accuracy is plenty for table display)."""
        if self.sign == 0:
            return 0.0
        with local_precision(_LOG_BITS):
            frac = self.log10_abs - mpmath.floor(self.log10_abs)
            return float(self.sign * mpmath.power(10, frac))

    def format(self, digits: int = 5) -> str:
        if self.sign == 0:
            return "0"
        m = self.mantissa
        return f"{m:.{digits - 1}f}e{self.exponent:+d}"

    def __str__(self) -> str:  # pragma: no cover - display helper
        return self.format()

    # -- comparisons (by signed magnitude) ----------------------------------

    def _key(self):
        return (self.sign, self.sign * self.log10_abs)

    def __lt__(self, other: "LogMagnitude") -> bool:
        a, b = self, other
        if a.sign != b.sign:
            return a.sign < b.sign
        if a.sign == 0:
            return False
        return (a.log10_abs < b.log10_abs) if a.sign > 0 else (a.log10_abs > b.log10_abs)

    def __le__(self, other: "LogMagnitude") -> bool:
        return self < other or self == other

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogMagnitude):
            return NotImplemented
        if self.sign != other.sign:
            return False
        return self.sign == 0 or self.log10_abs == other.log10_abs

    def __hash__(self) -> int:
        return hash((self.sign, str(self.log10_abs) if self.sign else ""))


Like = Union[LogMagnitude, int, float, mpf]


def as_logmag(x: Like) -> LogMagnitude:
    return x if isinstance(x, LogMagnitude) else LogMagnitude.from_number(x)


def log_mul(a: Like, b: Like) -> LogMagnitude:
    a, b = as_logmag(a), as_logmag(b)
    if a.sign == 0 or b.sign == 0:
        return LogMagnitude.zero()
    with local_precision(_LOG_BITS):
        return LogMagnitude(a.sign * b.sign, a.log10_abs + b.log10_abs)


def log_div(a: Like, b: Like) -> LogMagnitude:
    a, b = as_logmag(a), as_logmag(b)
    if b.sign == 0:
        raise ZeroDivisionError("log-domain division by zero")
    if a.sign == 0:
        return LogMagnitude.zero()
    with local_precision(_LOG_BITS):
        return LogMagnitude(a.sign * b.sign, a.log10_abs - b.log10_abs)


def log_pow(a: Like, k: int) -> LogMagnitude:
    a = as_logmag(a)
    if a.sign == 0:
        if k <= 0:
            raise ZeroDivisionError("0 cannot be raised to a non-positive power")
        return LogMagnitude.zero()
    sign = 1 if (a.sign > 0 or k % 2 == 0) else -1
    with local_precision(_LOG_BITS):
        return LogMagnitude(sign, a.log10_abs * k)


def log_add(a: Like, b: Like) -> LogMagnitude:
    """Signed addition.  Same-sign operands (or a zero) always work; opposite
    signs are rejected unless the magnitudes differ by more than the working
    log precision, in which case the larger operand wins exactly."""
    a, b = as_logmag(a), as_logmag(b)
    if a.sign == 0:
        return b
    if b.sign == 0:
        return a
    with local_precision(_LOG_BITS):
        hi, lo = (a, b) if a.log10_abs >= b.log10_abs else (b, a)
        diff = hi.log10_abs - lo.log10_abs
        if a.sign == b.sign:
            bump = mpmath.log10(1 + mpmath.power(10, -diff))
            return LogMagnitude(a.sign, hi.log10_abs + bump)
        # Opposite signs: forbid cancellation we cannot resolve.
        if diff > LOG_DIGITS:
            return hi
        if diff == 0:
            raise CancellationError("exact cancellation of equal magnitudes")
        drop = mpmath.log10(1 - mpmath.power(10, -diff))
        return LogMagnitude(hi.sign, hi.log10_abs + drop)


def log_sum_magnitudes(items) -> LogMagnitude:
    """|x1| + |x2| + ... in the log domain (always well-posed)."""
    total = LogMagnitude.zero()
    for it in items:
        total = log_add(total, as_logmag(it).abs())
    return total


def log_from_float_log10(log10_abs: float, sign: int = 1) -> LogMagnitude:
    if math.isinf(log10_abs) and log10_abs < 0:
        return LogMagnitude.zero()
    return LogMagnitude.from_log10(sign, log10_abs)
