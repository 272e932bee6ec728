"""Exact Bernoulli numbers, shared by the zeta Euler-Maclaurin tail and the
Stirling series for Gamma.

B_{2n} is recovered from tangent numbers: tan x = sum T_n x^(2n-1)/(2n-1)!
and T_n = 2^{2n} (2^{2n} - 1) |B_{2n}| / (2n).  The tangent-number triangle
is pure integer arithmetic, so the cache is exact and grows on demand.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Dict, List

from gmpy2 import mpz

_lock = threading.RLock()
_tangent: List[mpz] = []  # _tangent[n-1] = T_n
_bernoulli: Dict[int, Fraction] = {0: Fraction(1), 1: Fraction(-1, 2)}


def _extend_tangent(kmax: int) -> None:
    """Recompute the triangle up to T_kmax (quadratic, integer-only)."""
    global _tangent
    T = [mpz(1)]
    for k in range(2, kmax + 1):
        T.append(T[-1] * (k - 1))
    for k in range(2, kmax + 1):
        for j in range(k - 1, kmax):
            T[j] = (j - k + 1) * T[j - 1] + (j - k + 3) * T[j]
    _tangent = T


def bernoulli_pair(m: int):
    """Exact B_m as an UNNORMALIZED (numerator, denominator) integer pair.

    High-precision consumers convert these straight to fixed point or mpf;
    normalizing (gcd of multi-thousand-digit integers) would cost more than
    the computations they feed.
    """
    if m < 0:
        raise ValueError("Bernoulli index must be >= 0")
    if m == 0:
        return (1, 1)
    if m == 1:
        return (-1, 2)
    if m % 2 == 1:
        return (0, 1)
    n = m // 2
    with _lock:
        if len(_tangent) < n:
            # Rebuilds are quadratic, so grow with modest headroom: enough to
            # amortize ladders of small requests without overshooting a large
            # one-off request by a big factor.
            _extend_tangent(max(int(1.15 * n) + 8, (3 * len(_tangent)) // 2, 64))
        t = _tangent[n - 1]
    num = int(2 * n * t)
    den = int(mpz(2) ** (2 * n) * (mpz(2) ** (2 * n) - 1))
    return (num, den) if n % 2 == 1 else (-num, den)


def bernoulli(m: int) -> Fraction:
    """Exact B_m as a reduced Fraction (B_1 = -1/2 convention)."""
    if m in _bernoulli:
        return _bernoulli[m]
    num, den = bernoulli_pair(m)
    frac = Fraction(num, den)
    if m <= 512:  # keep the small ones; huge reduced fractions are rarely reused
        with _lock:
            _bernoulli[m] = frac
    return frac
