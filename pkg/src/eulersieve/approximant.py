"""Regularized products, the symmetrized approximant, the reference completed
xi, and the approximation defect delta that drives the sieve.

delta(B, s0) subtracts two O(1) quantities that agree to hundreds or
thousands of digits, so its working precision is seeded from the explicit
main-term estimate for the leading missing index and then escalated until two
successive evaluations agree to 10 significant digits.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import mpmath
from mpmath import mpc, mpf

from . import special
from .euler_core import BaseSet, g_factor, xi_colon
from .logmag import LogMagnitude, log_add, log_mul, log_pow
from .precision import (
    DomainError,
    NonConvergenceError,
    PoleError,
    PrecisionSpec,
    format_decimal,
    local_precision,
)
from .principal_part import TruncationPlan, xi_pp

DEFAULT_PREC = PrecisionSpec(30)
DEFAULT_PRECISION_CEILING = 100_000
_CEILING_ENV = "EULERSIEVE_PRECISION_CEILING"


def precision_ceiling() -> int:
    v = os.environ.get(_CEILING_ENV)
    return int(v) if v else DEFAULT_PRECISION_CEILING


@dataclass(frozen=True)
class DeltaResult:
    """Signed approximation defect with a log-domain mirror of its size."""

    value: object  # mpf when s0 is real, else mpc
    magnitude: LogMagnitude
    working_digits_used: int
    tail_estimate: LogMagnitude
    reliable: bool

    def to_json_dict(self, bases: BaseSet, s0, digits: int = 12) -> Dict:
        return {
            "bases": bases.serialize(),
            "s0": format_decimal(s0, digits),
            "value": format_decimal(self.value, digits),
            "log10_abs": float(self.magnitude.log10_abs) if self.magnitude.sign else None,
            "sign": self.magnitude.sign,
            "digits_used": self.working_digits_used,
            "reliable": self.reliable,
        }


def xi_reg(B: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC, plan: Optional[TruncationPlan] = None):
    """Regularized pole-cleared product: xi_B^:(s) minus its principal part.
    Extends continuously across the poles, but evaluation at them is
    rejected (use nearby points)."""
    with local_precision(prec.working_bits):
        pp = xi_pp(B, s, prec, plan)
        return xi_colon(B, s, prec) - pp.value


def _xi_reg_with_tail(B: BaseSet, s, prec: PrecisionSpec):
    with local_precision(prec.working_bits):
        pp = xi_pp(B, s, prec)
        return xi_colon(B, s, prec) - pp.value, pp.tail_estimate


def xi_approx(B: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC):
    """(xi_B^:reg(s) + xi_B^:reg(1-s)) / (s^m (1-s)^m); symmetric in
    s <-> 1-s by construction.  Rejected at s in {0, 1}."""
    value, _ = _xi_approx_with_tail(B, s, prec)
    return value


def _xi_approx_with_tail(B: BaseSet, s, prec: PrecisionSpec):
    with local_precision(prec.working_bits):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        if isinstance(s, mpc) and s.imag == 0:
            s = s.real
        if s == 0 or s == 1:
            raise DomainError("xi_approx is singular at s in {0, 1}")
        m = B.m
        denom = mpmath.power(s, m) * mpmath.power(1 - s, m)
        if isinstance(s, mpf) and s == mpf(1) / 2:
            reg, tail = _xi_reg_with_tail(B, s, prec)
            num = 2 * reg
            tail_total = log_add(tail, tail)
        else:
            reg1, tail1 = _xi_reg_with_tail(B, s, prec)
            reg2, tail2 = _xi_reg_with_tail(B, 1 - s, prec)
            num = reg1 + reg2
            tail_total = log_add(tail1, tail2)
        value = num / denom
        scaled_tail = log_mul(tail_total, LogMagnitude.from_number(abs(1 / denom)))
        return value, scaled_tail


def zeta_approx(B: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC):
    """xi_approx / g(s); rejected where g vanishes or has poles."""
    with local_precision(prec.working_bits):
        g = g_factor(s, prec)
        if g == 0:
            raise DomainError(f"g vanishes at s = {s}; zeta approximant undefined")
        return xi_approx(B, s, prec) / g


def xi_reference(s, prec: PrecisionSpec = DEFAULT_PREC):
    """Completed xi(s) = g(s) zeta(s), with the known limits 1/2 at s = 0, 1."""
    with local_precision(prec.working_bits):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        real = isinstance(s, mpf) or s.imag == 0
        if real:
            re = s.real if isinstance(s, mpc) else s
            if re == 0 or re == 1:
                return mpf(1) / 2
        return g_factor(s, prec) * special.riemann_zeta(s, prec)


# ---------------------------------------------------------------------------
# leading missing index and magnitude seeding
# ---------------------------------------------------------------------------


def dirichlet_deficit(B: BaseSet, limit: int) -> Dict[int, int]:
    """Coefficients of zeta(s) - zeta_B(s) = sum d(n) n^(-s) for 2 <= n <=
    limit: d(n) = 1 - (number of factorizations of n into powers of the
    bases).  Nonzero d flags indices where the approximation differs."""
    counts = [0] * (limit + 1)
    counts[1] = 1
    for b in B.bases:
        for n in range(b, limit + 1):
            if n % b == 0:
                counts[n] += counts[n // b]
    return {n: 1 - counts[n] for n in range(2, limit + 1) if counts[n] != 1}


def leading_missing_index(B: BaseSet) -> Tuple[int, int]:
    """Smallest n >= 2 with a nonzero deficit coefficient, and that
    coefficient (+1 for a skipped integer, -1 for a double-counted one)."""
    limit = 4
    while True:
        limit = max(2 * limit, 2 * (max(B.bases) if B.m else 2) + 4)
        d = dirichlet_deficit(B, limit)
        if d:
            n = min(d)
            return n, d[n]
        if limit > 10**7:
            raise NonConvergenceError("no missing index found (degenerate base set)")


def seed_digits(B: BaseSet, s0_abs: float = 0.5) -> int:
    """Decimal digits of cancellation expected in delta: -log10 of the
    main-term size 2^(2m+1) * 2 e^(-pi n*^2) (2 pi n*^2)^(2m+1) at the
    leading missing index, plus a polynomial allowance for |s0|."""
    n0, _ = leading_missing_index(B)
    m = B.m
    lg = (
        math.log10(2.0)
        - math.pi * n0 * n0 * _LG_E
        + (2 * m + 1) * (math.log10(2 * math.pi * n0 * n0) + math.log10(2.0))
    )
    pad = (2 * m + 2) * math.log10(2.0 + s0_abs)
    return max(10, int(-lg + pad) + 1)


_LG_E = math.log10(math.e)


def delta(
    B: BaseSet,
    s0,
    prec_hint: Optional[PrecisionSpec] = None,
    ceiling_digits: Optional[int] = None,
) -> DeltaResult:
    """xi_B^approx(s0) - xi(s0), with adaptively escalated working precision:
    seeded from the main-term estimate plus 60 guard digits, then the guard
    is doubled until two successive evaluations agree to 10 significant
    digits."""
    ceiling = ceiling_digits or precision_ceiling()
    with local_precision(64):
        s0n = mpc(s0) if isinstance(s0, (mpc, complex)) else mpf(s0)
        if s0n == 0 or s0n == 1:
            raise DomainError("delta undefined at s0 in {0, 1}")
        s0_abs = float(abs(s0n))
    base_digits = seed_digits(B, s0_abs)
    if prec_hint is not None:
        base_digits = max(base_digits, prec_hint.target_digits)
    guard0 = prec_hint.guard_digits if prec_hint is not None else 30

    def evaluate(extra: int):
        prec = PrecisionSpec(base_digits + extra, guard0)
        with local_precision(prec.working_bits):
            s0w = mpc(s0) if isinstance(s0, (mpc, complex)) else mpf(s0)
            if isinstance(s0w, mpc) and s0w.imag == 0:
                s0w = s0w.real
            approx, tail = _xi_approx_with_tail(B, s0w, prec)
            ref = xi_reference(s0w, prec)
            return approx - ref, tail, prec

    # Guard-doubling rungs: extra digits 30, 60, 120, ...  Within each
    # comparison the higher rung runs first so the lower one is served from
    # the (higher-precision) gamma cache.
    value_hi, tail_hi, prec_hi = evaluate(60)
    value_lo, _, _ = evaluate(30)
    extra = 60
    while True:
        with local_precision(prec_hi.working_bits):
            agreed = (value_hi == 0 and value_lo == 0) or (
                value_hi != 0
                and abs(value_hi - value_lo) <= abs(value_hi) * mpf(10) ** -10
            )
        if agreed:
            mag = LogMagnitude.from_number(value_hi)
            reliable = bool(
                value_hi != 0
                and log_mul(tail_hi, LogMagnitude.from_number(10**5)) < mag.abs()
            )
            return DeltaResult(value_hi, mag, prec_hi.working_digits, tail_hi, reliable)
        extra *= 2
        if base_digits + extra > ceiling:
            raise NonConvergenceError(
                f"delta(B={B}, s0={s0}) failed to stabilize below the "
                f"precision ceiling of {ceiling} digits"
            )
        value_lo = value_hi
        value_hi, tail_hi, prec_hi = evaluate(extra)
