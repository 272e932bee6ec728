"""Precision contracts and arbitrary-precision value plumbing.

All public numeric results in this package are mpmath values computed at a
working precision of ``target_digits + guard_digits`` decimal digits and are
meaningful to ``target_digits`` digits.  Every operation takes an explicit
:class:`PrecisionSpec`; nothing reads ambient precision state except inside a
``local_precision`` block that the operation itself opens.
"""

from __future__ import annotations

import re
from contextlib import contextmanager
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

# Public aliases: the package's "big" scalar types are mpmath's.
BigReal = mpf
BigComplex = mpc

# Decimal digits -> binary bits, with a little slack beyond log2(10).
_BITS_PER_DIGIT = 3.3219280948873626

DEFAULT_GUARD_DIGITS = 30


class NumericsError(ArithmeticError):
    """Base class for numeric contract violations."""


class PoleError(NumericsError):
    """Evaluation requested at (or too close to) a pole."""


class NonConvergenceError(NumericsError):
    """An internal series/iteration failed to reach the requested tolerance."""


class DomainError(NumericsError, ValueError):
    """Argument outside an operation's domain."""


@dataclass(frozen=True)
class PrecisionSpec:
    """Requested accuracy: ``target_digits`` of trustworthy output digits,
    computed with ``guard_digits`` extra working digits."""

    target_digits: int
    guard_digits: int = DEFAULT_GUARD_DIGITS

    def __post_init__(self) -> None:
        if self.target_digits < 10:
            raise DomainError(f"target_digits must be >= 10, got {self.target_digits}")
        if self.guard_digits < 0:
            raise DomainError(f"guard_digits must be >= 0, got {self.guard_digits}")

    @property
    def working_digits(self) -> int:
        return self.target_digits + self.guard_digits

    @property
    def working_bits(self) -> int:
        return digits_to_bits(self.working_digits)


def digits_to_bits(digits: int) -> int:
    return int(digits * _BITS_PER_DIGIT) + 8


@contextmanager
def local_precision(bits: int):
    """Temporarily set mpmath's working precision (in bits)."""
    old = mp.prec
    mp.prec = bits
    try:
        yield
    finally:
        mp.prec = old


@contextmanager
def local_digits(digits: int):
    with local_precision(digits_to_bits(digits)):
        yield


def mag10(x) -> float:
    """log10 of |x| to within ~0.31, from the binary exponent only (O(1);
    for stop rules and precision scheduling, never for results)."""
    m = mp.mag(x)
    if m == mpmath.mpf("-inf"):
        return float("-inf")
    return float(m) * 0.30102999566398

def ensure_finite(value, what: str = "value"):
    """Reject NaN/infinite results: overflow is an error, never a silent escape."""
    vals = (value.real, value.imag) if isinstance(value, mpc) else (value,)
    for v in vals:
        if not mpmath.isfinite(v):
            raise NumericsError(f"{what} is not finite: {value}")
    return value


def to_spec(x, prec: PrecisionSpec):
    """Convert ``x`` (str/int/float/Fraction/mpf/mpc/complex) at working precision."""
    with local_precision(prec.working_bits):
        if isinstance(x, (mpc, complex)):
            return mpc(x)
        if isinstance(x, str):
            return mpf(x)
        try:
            return mpf(x)
        except (TypeError, ValueError):
            # Fractions and other rationals.
            return mpf(x.numerator) / mpf(x.denominator)


def round_to_target(value, prec: PrecisionSpec):
    """Round a working-precision value down to target_digits."""
    bits = digits_to_bits(prec.target_digits)
    with local_precision(bits):
        if isinstance(value, mpc):
            return mpc(value.real + mpf(0), value.imag + mpf(0))
        return value + mpf(0)


_DEC_RE = re.compile(r"^[+-]?\d\.\d+e[+-]\d+$")


def format_decimal(x, digits: int) -> str:
    """Scientific-notation decimal string: ``±d.ddd…e±EEE`` with ``digits``
    mantissa digits.  Deterministic for fixed input and digits."""
    if isinstance(x, mpc):
        if x.imag == 0:
            return format_decimal(x.real, digits)
        return f"{format_decimal(x.real, digits)},{format_decimal(x.imag, digits)}"
    x = mpf(x) if not isinstance(x, mpf) else x
    if x == 0:
        return "+0." + "0" * (digits - 1) + "e+0"
    sign = "-" if x < 0 else "+"
    s = mpmath.nstr(abs(x), digits, min_fixed=1, max_fixed=0, strip_zeros=False)
    if "e" not in s:
        s += "e+0"
    mant, exp = s.split("e")
    if "." not in mant:
        mant += "."
    whole, frac = mant.split(".")
    frac = (frac + "0" * digits)[: digits - 1]
    e = int(exp)
    out = f"{sign}{whole}.{frac}e{'+' if e >= 0 else '-'}{abs(e)}"
    return out


def parse_point(text: str, prec: PrecisionSpec):
    """Parse "RE" or "RE,IM" decimal strings into mpf/mpc at working precision."""
    with local_precision(prec.working_bits):
        parts = text.split(",")
        if len(parts) == 1:
            return mpf(parts[0].strip())
        if len(parts) == 2:
            return mpc(mpf(parts[0].strip()), mpf(parts[1].strip()))
    raise DomainError(f"cannot parse point {text!r}; expected RE or RE,IM")
