"""Arbitrary-precision special functions: Gamma, the Riemann zeta function,
Stirling enclosures, and the Gamma-ratio decay bound.

Two genuinely independent evaluation routes exist for each headline function:
Gamma via the argument-shifted Stirling engine vs. reflection/product
composition, and zeta via Euler-Maclaurin vs. the accelerated alternating
series.  Cross-agreement of the pairs is part of the acceptance suite.
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Dict, Tuple

import mpmath
from mpmath import mpc, mpf

from . import _stirling
from .bernoulli import bernoulli_pair
from .precision import (
    DomainError,
    NonConvergenceError,
    PoleError,
    PrecisionSpec,
    ensure_finite,
    local_precision,
)

DEFAULT_PREC = PrecisionSpec(30)

_PAD_BITS = 16


def _is_real(s) -> bool:
    return not isinstance(s, (mpc, complex)) or (isinstance(s, mpc) and s.imag == 0)


def _as_parts(s) -> Tuple[mpf, mpf]:
    if isinstance(s, mpc):
        return s.real, s.imag
    if isinstance(s, complex):
        return mpf(s.real), mpf(s.imag)
    return mpf(s), mpf(0)


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------


def gamma(s, prec: PrecisionSpec = DEFAULT_PREC, _wbits: int = None):
    """Gamma(s), accurate to prec.target_digits significant digits.

    Pole error for s in {0, -1, -2, ...}.  Arguments left of Re s = 1/2 go
    through the reflection formula; the right half-plane uses upward shifting
    into the Stirling regime.
    """
    wbits = _wbits or (prec.working_bits + _PAD_BITS)
    re, im = _as_parts(s)
    real_input = im == 0
    if real_input and re <= 0 and re == mpmath.floor(re):
        raise PoleError(f"gamma pole at s = {s}")
    with local_precision(wbits):
        if re >= mpf(1) / 2:
            if real_input:
                g = _stirling.gamma_real_positive(mpf(re), wbits)
            else:
                g = _stirling.gamma_halfplane(mpc(re, im), wbits)
        else:
            # reflection: Gamma(s) = pi / (sin(pi s) Gamma(1 - s))
            z = mpc(re, im) if not real_input else mpf(re)
            sinpiz = mpmath.sin(mpmath.pi * z)
            if sinpiz == 0:
                raise PoleError(f"gamma pole at s = {s}")
            w = 1 - z
            if real_input:
                gref = _stirling.gamma_real_positive(mpf(w), wbits)
            else:
                gref = _stirling.gamma_halfplane(mpc(w), wbits)
            g = mpmath.pi / (sinpiz * gref)
        if real_input and not isinstance(g, mpf):
            g = g.real
        return ensure_finite(g, "gamma")


def gamma_via_reflection(s, prec: PrecisionSpec = DEFAULT_PREC):
    """Independent Gamma route for 0 < Re s < 1: product/reflection
    composition pi / (sin(pi s) Gamma(1-s)), with Gamma(1-s) evaluated by the
    Stirling engine at the mirrored point."""
    re, im = _as_parts(s)
    if not (0 < re < 1):
        raise DomainError("reflection route restricted to the strip 0 < Re s < 1")
    wbits = prec.working_bits + _PAD_BITS
    with local_precision(wbits):
        z = mpf(re) if im == 0 else mpc(re, im)
        gref = (
            _stirling.gamma_real_positive(1 - mpf(re), wbits)
            if im == 0
            else _stirling.gamma_halfplane(1 - mpc(re, im), wbits)
        )
        return ensure_finite(mpmath.pi / (mpmath.sin(mpmath.pi * z) * gref), "gamma")


def gamma_imag_abs(y, prec: PrecisionSpec = DEFAULT_PREC) -> mpf:
    """|Gamma(iy)| for real y > 0, from the exact identity
    |Gamma(iy)|^2 = pi / (y sinh(pi y))."""
    if y <= 0:
        raise DomainError("y must be positive")
    with local_precision(prec.working_bits + _PAD_BITS):
        y = mpf(y)
        return mpmath.sqrt(mpmath.pi / (y * mpmath.sinh(mpmath.pi * y)))


def stirling_bounds(x, prec: PrecisionSpec = DEFAULT_PREC) -> Tuple[mpf, mpf]:
    """(lower, upper) with lower <= Gamma(x) <= upper for real x > 0:
    sqrt(2 pi) x^(x-1/2) e^(-x) and the same times e^(1/(12x))."""
    x = mpf(x) if not isinstance(x, mpf) else x
    if x <= 0:
        raise DomainError(f"stirling_bounds requires x > 0, got {x}")
    with local_precision(prec.working_bits + _PAD_BITS):
        lower = mpmath.sqrt(2 * mpmath.pi) * mpmath.power(x, x - mpf(1) / 2) * mpmath.exp(-x)
        upper = lower * mpmath.exp(1 / (12 * x))
        return lower, upper


def gamma_ratio_bound(x, y, prec: PrecisionSpec = DEFAULT_PREC) -> mpf:
    """exp(-min(|y|, y^2/x)/4), an upper bound for |Gamma(x+iy)/Gamma(x)|
    valid for real x >= 1."""
    x = mpf(x) if not isinstance(x, mpf) else x
    y = mpf(y) if not isinstance(y, mpf) else y
    if x < 1:
        raise DomainError(f"gamma_ratio_bound requires x >= 1, got {x}")
    with local_precision(prec.working_bits + _PAD_BITS):
        m = min(abs(y), y * y / x)
        return mpmath.exp(-m / 4)


# ---------------------------------------------------------------------------
# Riemann zeta
# ---------------------------------------------------------------------------

_zeta_coeff_lock = threading.RLock()
_zeta_coeffs: Dict[int, list] = {}  # wbits -> [B_2/(2)!, B_4/(4)!, ...] as mpf


def _em_coeffs(kmax: int, wbits: int) -> list:
    """B_{2k}/(2k)! for k = 1..kmax at wbits, cached per precision.  The
    conversion avoids exact rational reduction (the numerators run to
    thousands of digits; a gcd there would dwarf the zeta evaluation)."""
    with _zeta_coeff_lock:
        cache = _zeta_coeffs.setdefault(wbits, [])
        if len(cache) < kmax:
            bernoulli_pair(2 * kmax)  # one-pass table build
            with local_precision(wbits):
                fact = math.factorial(2 * len(cache)) if cache else 1
                for k in range(len(cache) + 1, kmax + 1):
                    fact *= (2 * k - 1) * (2 * k)
                    num, den = bernoulli_pair(2 * k)
                    cache.append(mpf(num) / mpf(den) / mpf(fact))
        return cache


def _em_plan(digits: int, abs_im: float) -> int:
    """N = M for Euler-Maclaurin.  With M = N the k-th correction term decays
    like (pi e)^(-2k), i.e. ~1.8632 digits per term."""
    need = digits + 0.7 * abs_im + 10
    n = int(need / 1.8632) + 4
    return max(n, int(0.8 * abs_im) + 8)


def riemann_zeta(s, prec: PrecisionSpec = DEFAULT_PREC, _wbits: int = None):
    """zeta(s) by Euler-Maclaurin summation with exact-rational Bernoulli
    coefficients.  Pole error at s = 1."""
    wbits = _wbits or (prec.working_bits + _PAD_BITS)
    re, im = _as_parts(s)
    if im == 0 and re == 1:
        raise PoleError("zeta pole at s = 1")
    digits = int(wbits / 3.3219280948873626) + 1
    N = _em_plan(digits, abs(float(im)))
    with local_precision(wbits + 32):
        z = mpf(re) if im == 0 else mpc(re, im)
        acc = mpmath.mpf(0) if im == 0 else mpc(0)
        if im == 0 and re == mpf(1) / 2:
            # on the critical point n^(-1/2) is a square root, much cheaper
            # than a general power at high precision
            for n in range(1, N):
                acc += 1 / mpmath.sqrt(n)
            Nz = 1 / mpmath.sqrt(N)
        else:
            for n in range(1, N):
                acc += mpmath.power(n, -z)
            Nz = mpmath.power(N, -z)
        acc += Nz / 2
        acc += Nz * N / (z - 1)
        # correction sum: sum_k B_2k/(2k)! * (z)_{2k-1} * N^{-z-2k+1}
        poch = z  # (z)_1
        npow = Nz / N  # N^{-z-2k+1} at k = 1
        nsq = mpf(1) / (N * N)
        term = mpmath.mpf(0)
        coeffs = _em_coeffs(N, wbits)
        for k in range(1, N + 1):
            term = coeffs[k - 1] * poch * npow
            acc += term
            poch = poch * (z + 2 * k - 1) * (z + 2 * k)
            npow = npow * nsq
        if abs(term) > mpmath.power(10, -digits) * max(abs(acc), mpf(1)):
            raise NonConvergenceError("Euler-Maclaurin tail failed to converge")
    with local_precision(wbits):
        out = acc.real + mpf(0) if im == 0 else mpc(acc)
        return ensure_finite(out, "zeta")


_borwein_lock = threading.RLock()
_borwein_d: Dict[int, list] = {}


def _borwein_coeffs(n: int) -> list:
    d = _borwein_d.get(n)
    if d is None:
        with _borwein_lock:
            d = _borwein_d.get(n)
            if d is None:
                t = Fraction(1)  # n * t_0 with t_i = (n+i-1)! 4^i / ((n-i)! (2i)!)
                partial = [t]
                for i in range(1, n + 1):
                    t = t * 4 * (n + i - 1) * (n - i + 1)
                    t = t / ((2 * i) * (2 * i - 1))
                    partial.append(partial[-1] + t)
                d = [int(p) for p in partial]  # the d_k are integers
                _borwein_d[n] = d
    return d


def zeta_alternating(s, prec: PrecisionSpec = DEFAULT_PREC):
    """Independent zeta route for Re s > 0, s != 1: Chebyshev-accelerated
    alternating series (eta function), error ~ (3 + sqrt(8))^(-n)."""
    re, im = _as_parts(s)
    if re <= 0:
        raise DomainError("alternating route requires Re s > 0")
    if im == 0 and re == 1:
        raise PoleError("zeta pole at s = 1")
    wbits = prec.working_bits + _PAD_BITS
    digits = prec.working_digits
    n = int(1.32 * (digits + 6 + 1.4 * abs(float(im)))) + 8
    d = _borwein_coeffs(n)
    with local_precision(wbits + 32):
        z = mpf(re) if im == 0 else mpc(re, im)
        acc = mpc(0) if im != 0 else mpf(0)
        dn = d[n]
        for k in range(n):
            coeff = d[k] - dn
            acc += (coeff if k % 2 == 0 else -coeff) * mpmath.power(k + 1, -z)
        eta_factor = 1 - mpmath.power(2, 1 - z)
        if eta_factor == 0:
            raise PoleError("alternating route undefined where 2^(1-s) = 1")
        val = -acc / (mpf(dn) * eta_factor)
    with local_precision(wbits):
        out = val.real + mpf(0) if im == 0 else mpc(val)
        return ensure_finite(out, "zeta")
