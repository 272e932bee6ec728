"""Fixed-point Stirling engine for the Gamma function.

Ghost-pole sums need tens of thousands of Gamma values on and near the
imaginary axis at precisions up to a few thousand digits; mpmath's generic
gamma is an order of magnitude too slow for that.  This engine computes

    ln Gamma(z) = (z - 1/2) ln z - z + ln(2 pi)/2 + S(z),
    S(z) = sum_k B_{2k} / ((2k)(2k-1) z^{2k-1}),

with the argument first shifted by an integer K so |z + K| >= R, where R is
chosen (per working precision) to balance shift cost against series length.
The shift product and the series run on gmpy2 integers in W-bit fixed point;
only the enclosing log/exp touch mpmath.

Design notes:
  * series coefficients are pre-scaled by an exact power of two rho ~ R so
    the iterated power variable v = (rho/z)^2 stays <= 1 in magnitude
    (otherwise huge Bernoulli numbers force huge intermediate integers);
  * the shift multiplies factor PAIRS (z+j)(z+K-1-j) = A + j(K-1-j), costing
    one complex multiply per two factors;
  * the series uses Paterson-Stockmeyer blocking: ~2 integer multiplies per
    term instead of 6.
"""

from __future__ import annotations

import math
import threading
from typing import Dict, List, Tuple

import mpmath
from gmpy2 import mpz
from mpmath import mpc, mpf

from .bernoulli import bernoulli_pair
from .precision import PoleError, local_precision

_LN2 = math.log(2.0)
# R = RADIUS_FACTOR * (minimal Stirling radius W ln2 / (2 pi)); ~1.5 minimizes
# shift-multiplies + series-multiplies for worst-case (tiny |z|) arguments.
RADIUS_FACTOR = 1.5

_plan_lock = threading.RLock()
_plans: Dict[int, "_Plan"] = {}
_ln2pi_half: Dict[int, mpf] = {}


def _const_ln2pi_half(wbits: int) -> mpf:
    c = _ln2pi_half.get(wbits)
    if c is None:
        with local_precision(wbits):
            c = mpmath.log(2 * mpmath.pi) / 2
        _ln2pi_half[wbits] = c
    return c


class _Plan:
    """Per-precision constants: radius, scaled coefficients, block size."""

    __slots__ = ("wbits", "radius", "rho_bits", "kmax", "coeffs", "lg_coeffs", "block")

    def __init__(self, wbits: int):
        self.wbits = wbits
        rmin = wbits * _LN2 / (2 * math.pi)
        self.radius = max(RADIUS_FACTOR * rmin, 4.0)
        self.rho_bits = max(int(math.floor(math.log2(self.radius))), 1)
        rho = 2.0 ** self.rho_bits
        # series length: smallest k with (2k/(2 pi e R))^{2k} <= 2^-wbits
        target = wbits * _LN2
        lo, hi = 2.0, max(2 * math.pi * self.radius * 0.98, 8.0)
        if hi * math.log(2 * math.pi * math.e * self.radius / hi) < target:
            raise ArithmeticError("Stirling plan infeasible (radius too small)")
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid * math.log(2 * math.pi * math.e * self.radius / mid) >= target:
                hi = mid
            else:
                lo = mid
        self.kmax = int(hi / 2) + 4
        W = wbits
        bernoulli_pair(2 * self.kmax)  # build the tangent table in one pass
        coeffs: List[mpz] = []
        lgc: List[float] = []
        # scaled coefficient c~_k = B_{2k}/((2k)(2k-1)) / rho^(2k-1), exact
        # because rho is a power of two.
        for k in range(1, self.kmax + 1):
            bnum, bden = bernoulli_pair(2 * k)
            num = bnum
            den = bden * (2 * k) * (2 * k - 1)
            shift = W - self.rho_bits * (2 * k - 1)
            if shift >= 0:
                c = mpz(num << shift) // den
            else:
                c = mpz(num) // (mpz(den) << (-shift))
            coeffs.append(c)
            bl = c.bit_length()
            lgc.append((bl - W) * _LN2 / math.log(10) if bl else -1e18)
        self.coeffs = coeffs
        self.lg_coeffs = lgc
        self.block = max(int(math.sqrt(self.kmax)), 4)


def _get_plan(wbits: int) -> _Plan:
    plan = _plans.get(wbits)
    if plan is None:
        with _plan_lock:
            plan = _plans.get(wbits)
            if plan is None:
                plan = _Plan(wbits)
                _plans[wbits] = plan
    return plan


def _to_fixed(x: mpf, wbits: int) -> mpz:
    return mpz(mpmath.libmp.to_fixed(x._mpf_, wbits))


def _from_fixed(man: mpz, wbits: int) -> mpf:
    return mpf(mpmath.libmp.from_man_exp(int(man), -wbits))


def _series_ps(plan: _Plan, vr: mpz, vi: mpz, keff: int) -> Tuple[mpz, mpz]:
    """Paterson-Stockmeyer evaluation of P(v) = sum_{k>=1} c~_k v^{k-1}."""
    W = plan.wbits
    m = plan.block
    coeffs = plan.coeffs
    # powers v^0..v^{m-1}; v^m for the outer Horner step
    pow_r: List[mpz] = [mpz(1) << W]
    pow_i: List[mpz] = [mpz(0)]
    for _ in range(m):
        pr, pi = pow_r[-1], pow_i[-1]
        pow_r.append((pr * vr - pi * vi) >> W)
        pow_i.append((pr * vi + pi * vr) >> W)
    vmr, vmi = pow_r[m], pow_i[m]
    nblocks = (keff + m - 1) // m
    sr = si = mpz(0)
    for b in range(nblocks - 1, -1, -1):
        if b != nblocks - 1:
            sr, si = (sr * vmr - si * vmi) >> W, (sr * vmi + si * vmr) >> W
        base = b * m
        top = min(m, keff - base)
        for r in range(top):
            c = coeffs[base + r]
            sr += (c * pow_r[r]) >> W
            si += (c * pow_i[r]) >> W
    return sr, si


def _effective_terms(plan: _Plan, abs_z: float) -> int:
    """Trim the series when |z| exceeds the planned radius."""
    if abs_z <= plan.radius * 1.0001:
        return plan.kmax
    lg_v = 2 * (plan.rho_bits * _LN2 / math.log(10) - math.log10(abs_z))
    need = -(plan.wbits * _LN2 / math.log(10)) - 3
    for k in range(1, plan.kmax + 1):
        if plan.lg_coeffs[k - 1] + (k - 1) * lg_v < need:
            return k
    return plan.kmax


def lngamma_shifted(zr: mpf, zi: mpf, wbits: int):
    """Return (lnGamma(z + K), K, P) where P = prod_{j<K} (z + j) as an mpc
    (None when K = 0), so Gamma(z) = exp(lnGamma(z+K)) / P.

    Caller guarantees Re z >= 0 and z not at a pole.
    """
    plan = _get_plan(wbits)
    W = wbits
    x = float(zr)
    y = float(zi)
    abs_z = math.hypot(x, y)
    R = plan.radius
    if abs_z >= R:
        K = 0
    else:
        K = int(math.ceil(math.sqrt(max(R * R - y * y, 0.0)) - x)) + 1
    xr = _to_fixed(zr, W)
    xi = _to_fixed(zi, W)

    P = None
    if K:
        one = mpz(1) << W
        # A = z^2 + (K-1) z ; pair_j = A + j(K-1-j)
        z2r = (xr * xr - xi * xi) >> W
        z2i = (2 * xr * xi) >> W
        Ar = z2r + (K - 1) * xr
        Ai = z2i + (K - 1) * xi
        Pr, Pi, Pexp = one, mpz(0), 0
        limit = W + 64
        half = K // 2
        for j in range(half):
            fr = Ar + (mpz(j * (K - 1 - j)) << W)
            nr = (Pr * fr - Pi * Ai) >> W
            ni = (Pr * Ai + Pi * fr) >> W
            m = max(nr.bit_length(), ni.bit_length())
            if m > limit:
                sh = m - limit
                nr >>= sh
                ni >>= sh
                Pexp += sh
            Pr, Pi = nr, ni
        if K % 2:
            j = half  # middle factor z + (K-1)/2
            fr = xr + (mpz(j) << W)
            nr = (Pr * fr - Pi * xi) >> W
            ni = (Pr * xi + Pi * fr) >> W
            Pr, Pi = nr, ni
        with local_precision(W):
            P = mpc(
                mpf(mpmath.libmp.from_man_exp(int(Pr), Pexp - W)),
                mpf(mpmath.libmp.from_man_exp(int(Pi), Pexp - W)),
            )
        xr += mpz(K) << W
        abs_z = math.hypot(x + K, y)

    # v = (rho / z')^2 in fixed point
    d = (xr * xr + xi * xi) >> W
    if d == 0:
        raise PoleError("gamma argument too close to 0")
    sh = 2 * plan.rho_bits + W
    z2r = (xr * xr - xi * xi) >> W
    z2i = (2 * xr * xi) >> W
    vr = (z2r << sh) // ((z2r * z2r + z2i * z2i) >> W)
    vi = -((z2i << sh) // ((z2r * z2r + z2i * z2i) >> W))
    keff = _effective_terms(plan, abs_z)
    sr, si = _series_ps(plan, vr, vi, keff)
    # S = (rho / z') * P(v)
    ur = (xr << (plan.rho_bits + W)) // d
    ui = -((xi << (plan.rho_bits + W)) // d)
    Sr = (sr * ur - si * ui) >> W
    Si = (sr * ui + si * ur) >> W

    with local_precision(W):
        zp = mpc(_from_fixed(xr, W), _from_fixed(xi, W))
        S = mpc(_from_fixed(Sr, W), _from_fixed(Si, W))
        lng = (zp - mpf(1) / 2) * mpmath.log(zp) - zp + _const_ln2pi_half(W) + S
    return lng, K, P


def gamma_halfplane(z, wbits: int):
    """Gamma(z) for Re z >= 0 (z not a pole), mpc at wbits precision."""
    if isinstance(z, mpc):
        zr, zi = z.real, z.imag
    else:
        zr, zi = mpf(z), mpf(0)
    lng, K, P = lngamma_shifted(zr, zi, wbits)
    with local_precision(wbits):
        g = mpmath.exp(lng)
        if P is not None:
            g = g / P
        return g


def gamma_real_positive(x: mpf, wbits: int) -> mpf:
    """Gamma(x) for real x > 0 (real-arithmetic fast path of the same plan)."""
    plan = _get_plan(wbits)
    W = wbits
    xf = float(x)
    R = plan.radius
    K = 0 if xf >= R else int(math.ceil(R - xf)) + 1
    xr = _to_fixed(x, W)
    P = None
    Pexp = 0
    if K:
        one = mpz(1) << W
        Pm = one
        limit = W + 64
        a = xr
        for _ in range(K):
            Pm = (Pm * a) >> W
            a += one
            m = Pm.bit_length()
            if m > limit:
                sh = m - limit
                Pm >>= sh
                Pexp += sh
        P = (Pm, Pexp)
        xr += mpz(K) << W
        xf += K
    d = (xr * xr) >> W
    vr = ((mpz(1) << (2 * plan.rho_bits + W)) << W) // ((xr * xr) >> W)
    # v = rho^2 / x'^2 (real, positive)
    keff = _effective_terms(plan, xf)
    coeffs = plan.coeffs
    m = plan.block
    pow_r = [mpz(1) << W]
    for _ in range(m):
        pow_r.append((pow_r[-1] * vr) >> W)
    vm = pow_r[m]
    nblocks = (keff + m - 1) // m
    s = mpz(0)
    for b in range(nblocks - 1, -1, -1):
        if b != nblocks - 1:
            s = (s * vm) >> W
        base = b * m
        top = min(m, keff - base)
        for r in range(top):
            s += (coeffs[base + r] * pow_r[r]) >> W
    u = (mpz(1) << (plan.rho_bits + 2 * W)) // xr
    S = (s * u) >> W
    with local_precision(W):
        xp = _from_fixed(xr, W)
        Sv = _from_fixed(S, W)
        lng = (xp - mpf(1) / 2) * mpmath.log(xp) - xp + _const_ln2pi_half(W) + Sv
        g = mpmath.exp(lng)
        if P is not None:
            g = g / mpf(mpmath.libmp.from_man_exp(int(P[0]), P[1] - W))
        return g
