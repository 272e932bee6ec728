"""Finite Euler products, the completing factor g(s), pole-cleared variants,
and the ghost-pole calculus (enumeration and residues).

A finite product prod 1/(1 - b^(-s)) has "ghost" poles at s = 2 pi i n / log b
that the true zeta function does not have; everything downstream (principal
parts, regularization, approximants) is built from their residues.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import mpmath
from mpmath import mpc, mpf

from . import special
from .precision import (
    DomainError,
    PoleError,
    PrecisionSpec,
    ensure_finite,
    local_precision,
)
from .primes import is_perfect_power_of

DEFAULT_PREC = special.DEFAULT_PREC


class ResonanceError(PoleError):
    """Two bases share (or nearly share) a ghost-pole location."""


@dataclass(frozen=True)
class BaseSet:
    """Ordered finite set of integer bases >= 2 for a truncated Euler product.

    Invariant: no element is a perfect power of another element (that would
    merge ghost-pole lattices and break the simple-pole residue calculus).
    """

    bases: Tuple[int, ...]

    def __init__(self, bases: Iterable[int]):
        object.__setattr__(self, "bases", tuple(int(b) for b in bases))
        prev = None
        for b in self.bases:
            if b < 2:
                raise DomainError(f"base {b} < 2")
            if prev is not None and b <= prev:
                raise DomainError("bases must be strictly increasing")
            prev = b
        for a in self.bases:
            for b in self.bases:
                if a != b and is_perfect_power_of(b, a):
                    raise DomainError(f"base {b} is a power of base {a}")

    @property
    def m(self) -> int:
        return len(self.bases)

    def __len__(self) -> int:
        return len(self.bases)

    def __iter__(self):
        return iter(self.bases)

    def __contains__(self, b: int) -> bool:
        return b in self.bases

    def without(self, b: int) -> "BaseSet":
        if b not in self.bases:
            raise DomainError(f"{b} not in base set")
        return BaseSet(x for x in self.bases if x != b)

    def adjoin(self, q: int) -> "BaseSet":
        return BaseSet(sorted(self.bases + (q,)))

    def serialize(self) -> str:
        return ",".join(str(b) for b in self.bases)

    @classmethod
    def parse(cls, text: str) -> "BaseSet":
        text = text.strip()
        if not text:
            return cls(())
        return cls(int(tok) for tok in text.split(","))

    def __str__(self) -> str:
        return "{" + self.serialize() + "}"


@dataclass(frozen=True)
class GhostPole:
    """A pole s = 2 pi i n / log(base) of the truncated product."""

    base: int
    n: int
    location: mpc = field(compare=False)

    @property
    def height(self) -> float:
        return float(self.location.imag)


def _pole_tolerance(prec: PrecisionSpec) -> mpf:
    # reject evaluation within 10^(-target/2) of a ghost pole: close enough
    # to keep most of the plane usable, far enough to dodge catastrophic
    # cancellation in 1 - b^(-s)
    return mpmath.power(10, -(prec.target_digits // 2))


def nearest_ghost_pole_distance(B: BaseSet, s, prec: PrecisionSpec) -> mpf:
    """Distance from s to the closest point 2 pi i n/log b over b in B, n in Z
    (n = 0, the shared pole at the origin, included)."""
    if B.m == 0:
        return mpf("inf")
    with local_precision(prec.working_bits):
        s = mpc(s)
        t = s.imag
        best = mpf("inf")
        for b in B.bases:
            step = 2 * mpmath.pi / mpmath.log(b)
            n = mpmath.nint(t / step)
            for nn in (n - 1, n, n + 1):
                d = abs(s - mpc(0, nn * step))
                if d < best:
                    best = d
        return best


def zeta_B(B: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC):
    """prod_{b in B} 1/(1 - b^(-s)).  Near-pole error when s is within
    10^(-target/2) of a ghost pole or any factor denominator is below
    10^(-target)."""
    with local_precision(prec.working_bits):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        if B.m == 0:
            return mpf(1)
        tol = _pole_tolerance(prec)
        if nearest_ghost_pole_distance(B, s, prec) < tol:
            raise PoleError(f"{s} is within {tol} of a ghost pole of {B}")
        den_floor = mpmath.power(10, -prec.target_digits)
        out = mpf(1)
        for b in B.bases:
            den = 1 - mpmath.exp(-s * mpmath.log(b))
            if abs(den) < den_floor:
                raise PoleError(f"Euler factor for base {b} nearly singular at {s}")
            out = out / den
        return ensure_finite(out, "zeta_B")


def g_factor(s, prec: PrecisionSpec = DEFAULT_PREC):
    """g(s) = s(s-1)/2 * pi^(-s/2) * Gamma(s/2), the completing factor.

    Total at the removable points: g(0) = -1 (limit through the Gamma pole),
    g(1) = 0 (exact zero of s(s-1)).  Pole error at s in {-2, -4, ...}.
    """
    with local_precision(prec.working_bits):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        real = isinstance(s, mpf) or s.imag == 0
        re = s.real if isinstance(s, mpc) else s
        if real and re == 0:
            return mpf(-1)
        if real and re == 1:
            return mpf(0)
        if real and re < 0 and re == mpmath.floor(re) and int(re) % 2 == 0:
            raise PoleError(f"g has a pole at s = {s}")
        half = s / 2
        g = special.gamma(half, prec)
        out = s * (s - 1) / 2 * mpmath.exp(-half * mpmath.log(mpmath.pi)) * g
        return ensure_finite(out, "g_factor")


def xi_B(B: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC):
    """g(s) * zeta_B(B, s)."""
    with local_precision(prec.working_bits):
        return ensure_finite(g_factor(s, prec) * zeta_B(B, s, prec), "xi_B")


def xi_eq_B(B: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC):
    """Symmetrized xi_B(s) + xi_B(1-s)."""
    with local_precision(prec.working_bits):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        return ensure_finite(xi_B(B, s, prec) + xi_B(B, 1 - s, prec), "xi_eq_B")


def xi_colon(A: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC):
    """Pole-cleared s^|A| (1-s)^|A| xi_A(s); the exponent is the size of the
    set actually passed."""
    with local_precision(prec.working_bits):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        m = A.m
        return ensure_finite(
            mpmath.power(s, m) * mpmath.power(1 - s, m) * xi_B(A, s, prec), "xi_colon"
        )


def zeta_colon(B: BaseSet, s, prec: PrecisionSpec = DEFAULT_PREC):
    """s^m (1-s)^m zeta_B(s)."""
    with local_precision(prec.working_bits):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        m = B.m
        return mpmath.power(s, m) * mpmath.power(1 - s, m) * zeta_B(B, s, prec)


def ghost_poles(B: BaseSet, T, prec: PrecisionSpec = DEFAULT_PREC) -> List[GhostPole]:
    """All ghost poles with 0 < |height| <= T, each base separately, sorted by
    imaginary part."""
    T = mpf(T) if not isinstance(T, mpf) else T
    if T <= 0:
        raise DomainError("T must be positive")
    out: List[GhostPole] = []
    with local_precision(prec.working_bits):
        for b in B.bases:
            step = 2 * mpmath.pi / mpmath.log(b)
            n = 1
            while n * step <= T:
                for sign in (1, -1):
                    out.append(GhostPole(b, sign * n, mpc(0, sign * n * step)))
                n += 1
    out.sort(key=lambda p: p.height)
    return out


def _check_resonance(B: BaseSet, b: int, n: int, prec: PrecisionSpec) -> None:
    with local_precision(prec.working_bits):
        height = 2 * mpmath.pi * n / mpmath.log(b)
        tol = _pole_tolerance(prec)
        for q in B.bases:
            if q == b:
                continue
            step = 2 * mpmath.pi / mpmath.log(q)
            k = mpmath.nint(height / step)
            if k != 0 and abs(height - k * step) < tol:
                raise ResonanceError(
                    f"pole 2*pi*i*{n}/log({b}) collides with base {q} (n={int(k)})"
                )


def ghost_residue(B: BaseSet, b: int, n: int, prec: PrecisionSpec = DEFAULT_PREC):
    """Residue of xi_B^: at s0 = 2 pi i n / log b:
    s0 (1 - s0) xi^:_{B \\ {b}}(s0) / log b."""
    if b not in B:
        raise DomainError(f"base {b} not in {B}")
    if n == 0:
        raise DomainError("n must be nonzero (the n = 0 contribution vanishes)")
    _check_resonance(B, b, n, prec)
    with local_precision(prec.working_bits):
        s0 = mpc(0, 2 * mpmath.pi * n / mpmath.log(b))
        rest = B.without(b)
        val = s0 * (1 - s0) * xi_colon(rest, s0, prec) / mpmath.log(b)
        return ensure_finite(val, "ghost_residue")


def trivial_residue(B: BaseSet, n: int, prec: PrecisionSpec = DEFAULT_PREC):
    """Coefficient of 1/(s + 2n) from the Gamma(s/2) pole at s = -2n:
    (-1)^n 2 pi^n (2n+1) zeta_B^:(-2n) / Gamma(n)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    with local_precision(prec.working_bits):
        m = B.m
        # zeta_B^:(-2n) with exact integer Euler factors
        prod = mpf(1)
        for b in B.bases:
            prod /= 1 - mpf(b) ** (2 * n)
        zc = mpf(-2 * n) ** m * mpf(1 + 2 * n) ** m * prod
        sign = -1 if n % 2 else 1
        gam_n = mpf(1)
        for j in range(2, n):
            gam_n *= j
        val = sign * 2 * mpmath.power(mpmath.pi, n) * (2 * n + 1) * zc / gam_n
        return ensure_finite(val, "trivial_residue")
