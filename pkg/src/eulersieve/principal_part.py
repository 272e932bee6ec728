"""Principal part of the pole-cleared truncated product, with certified-style
truncation tails, plus the linear-forms-in-logarithms diagnostics.

The ghost-pole sum is evaluated with bases interleaved by pole height (near-
resonant cross-base terms cancel, so cancelling partners stay adjacent) and
in conjugate pairs of increasing |n|.  Each pair is computed at its own
working precision: a pair whose magnitude estimate is 10^k needs only
(target + guard + k) digits of absolute accuracy, which is what makes
thousand-digit evaluations affordable.
"""

from __future__ import annotations

import heapq
import math
import os
import threading
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import mpmath
from mpmath import mpc, mpf

from . import _stirling
from .euler_core import BaseSet, nearest_ghost_pole_distance
from .logmag import LogMagnitude, log_add
from .precision import (
    DomainError,
    NonConvergenceError,
    PoleError,
    PrecisionSpec,
    digits_to_bits,
    local_precision,
    mag10,
)
from .primes import multiplicatively_dependent

DEFAULT_PREC = PrecisionSpec(30)

_LG_E = math.log10(math.e)
_LG_PI_OVER_4 = math.pi / (4 * math.log(10))  # decimal decay of |Gamma(iT/2)| per height


# ---------------------------------------------------------------------------
# plans and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationPlan:
    """Caps and stop rule for the two principal-part sums."""

    ghost_cap: Dict[int, int]  # per-base max index N_b
    trivial_cap: int  # max index N_t
    stop_threshold: LogMagnitude
    consecutive_small: int = 5

    def __post_init__(self) -> None:
        for b, cap in self.ghost_cap.items():
            if cap < 1:
                raise DomainError(f"ghost cap for base {b} must be >= 1")
        if self.trivial_cap < 1:
            raise DomainError("trivial cap must be >= 1")
        if self.consecutive_small < 1:
            raise DomainError("consecutive_small must be >= 1")

    def scaled(self, factor: float) -> "TruncationPlan":
        return TruncationPlan(
            {b: max(1, int(c * factor)) for b, c in self.ghost_cap.items()},
            max(1, int(self.trivial_cap * factor)),
            self.stop_threshold,
            self.consecutive_small,
        )


@dataclass(frozen=True)
class PPValue:
    """Evaluated principal part plus an estimate of everything truncated."""

    value: object  # mpf for real s, mpc otherwise
    tail_estimate: LogMagnitude
    plan_used: TruncationPlan


def _pair_magnitude_estimate(m: int, lnp: float, n: int, abs_s: float) -> float:
    """Float log10 estimate of the (n, -n) residue-pair magnitude at distance
    |s - s0| ~ max(|s0| - |s|, 1/2).  Resonance spikes are NOT included; the
    caller adds margin."""
    h = 2 * math.pi / lnp
    t = n * h  # pole height
    lg_t = math.log10(t)
    y = t / 2.0
    # |Gamma(iy)| ~ sqrt(2 pi / y) e^(-pi y / 2)
    lg_gamma = 0.5 * (math.log10(2 * math.pi) - math.log10(y)) - (math.pi * y / 2) * _LG_E
    lg_den = math.log10(max(t - abs_s, 0.5))
    return (2 * m + 2) * lg_t - math.log10(2.0) + lg_gamma - math.log10(lnp) - lg_den + math.log10(2.0)


def default_plan(B: BaseSet, prec: PrecisionSpec) -> TruncationPlan:
    """Caps at twice the analytically predicted stopping index."""
    A = prec.target_digits + prec.guard_digits
    caps: Dict[int, int] = {}
    for b in B.bases:
        lnp = math.log(b)
        # invert the estimator's leading decay: pair magnitudes fall by
        # pi^2/(2 ln b ln 10) decimal digits per unit n
        decay = math.pi * math.pi / (2 * lnp * math.log(10))
        poly = (2 * B.m + 2) * 4.5  # generous cover for the polynomial growth
        caps[b] = max(8, int(2 * (A + poly + 20) / decay) + 16)
    cap_t = max(16, 2 * (A + 40))
    return TruncationPlan(caps, cap_t, LogMagnitude.from_log10(1, -A), 5)


# ---------------------------------------------------------------------------
# gamma table: Gamma(i y) for y = n pi / ln(base), cached across evaluations
# ---------------------------------------------------------------------------

_gamma_lock = threading.RLock()
_gamma_cache: Dict[Tuple[int, int], Tuple[int, mpc]] = {}
_CACHE_MIN_BITS = 768


def _bucket_bits(bits: int) -> int:
    if bits <= 2048:
        step = 128
    else:
        step = 512
    return ((bits + step - 1) // step) * step


def gamma_ghost(base: int, n: int, wbits: int) -> mpc:
    """Gamma(i n pi / log(base)) at >= wbits precision, cached per (base, n)."""
    key = (base, n)
    hit = _gamma_cache.get(key)
    if hit is not None and hit[0] >= wbits:
        with local_precision(wbits):
            v = hit[1]
            return mpc(v.real + mpf(0), v.imag + mpf(0))
    with local_precision(wbits + 16):
        y = mpmath.pi * n / mpmath.log(base)
        g = _stirling.gamma_halfplane(mpc(0, y), wbits + 16)
    if wbits >= _CACHE_MIN_BITS:
        with _gamma_lock:
            prev = _gamma_cache.get(key)
            if prev is None or prev[0] < wbits:
                _gamma_cache[key] = (wbits, g)
    with local_precision(wbits):
        return mpc(g.real + mpf(0), g.imag + mpf(0))


def clear_gamma_cache() -> None:
    with _gamma_lock:
        _gamma_cache.clear()


# -- parallel table prewarming ----------------------------------------------
#
# The (base, n) gamma values are independent, so big evaluations fork worker
# processes to fill the cache.  fork inherits the already-built Bernoulli and
# Stirling-plan tables, and results are deterministic bit-for-bit regardless
# of how the work is split.

_WORKERS_ENV = "EULERSIEVE_WORKERS"
_PREWARM_MIN_COST = 3e9  # estimated bit-ops below which forking is not worth it


def _worker_count() -> int:
    v = os.environ.get(_WORKERS_ENV)
    if v is not None:
        return max(1, int(v))
    return min(2, os.cpu_count() or 1)


def _prewarm_worker(task):
    base, items = task
    out = []
    for n, wbits in items:
        with local_precision(wbits + 16):
            y = mpmath.pi * n / mpmath.log(base)
            g = _stirling.gamma_halfplane(mpc(0, y), wbits + 16)
        out.append((n, wbits, g))
    return base, out


def _prewarm_gamma(jobs) -> None:
    """jobs: list of (base, n, wbits) cache misses.  Splits them over worker
    processes by estimated cost and installs the results."""
    import multiprocessing

    nproc = _worker_count()
    if nproc < 2 or len(jobs) < 8:
        return
    cost = lambda wb: float(wb) ** 2.4
    total = sum(cost(wb) for (_, _, wb) in jobs)
    if total < _PREWARM_MIN_COST:
        return
    # build the top plan (and with it the shared Bernoulli table) before
    # forking so the children inherit it instead of rebuilding it
    _stirling._get_plan(max(wb for (_, _, wb) in jobs) + 16)
    bins = [[] for _ in range(nproc)]
    loads = [0.0] * nproc
    for base, n, wb in sorted(jobs, key=lambda j: -cost(j[2])):
        i = loads.index(min(loads))
        bins[i].append((base, (n, wb)))
        loads[i] += cost(wb)
    tasks = []
    for b in bins:
        per_base: Dict[int, list] = {}
        for base, item in b:
            per_base.setdefault(base, []).append(item)
        tasks.extend(per_base.items())
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(nproc) as pool:
        for base, results in pool.imap_unordered(_prewarm_worker, tasks):
            with _gamma_lock:
                for n, wbits, g in results:
                    prev = _gamma_cache.get((base, n))
                    if prev is None or prev[0] < wbits:
                        _gamma_cache[(base, n)] = (wbits, g)


# ---------------------------------------------------------------------------
# the principal part itself
# ---------------------------------------------------------------------------


class _BaseStream:
    """Iterates the conjugate-pair ghost terms of one base in increasing |n|,
    maintaining iterated unit-circle powers at a decaying precision bucket."""

    __slots__ = (
        "base",
        "others",
        "m",
        "lnp_f",
        "h_f",
        "n",
        "bucket",
        "lnp",
        "h",
        "w_pi",
        "w_qs",
        "pow_pi",
        "pow_qs",
        "max_zeta_lg",
    )

    def __init__(self, base: int, B: BaseSet, wbits: int):
        self.base = base
        self.others = tuple(q for q in B.bases if q != base)
        self.m = B.m
        self.lnp_f = math.log(base)
        self.h_f = 2 * math.pi / self.lnp_f
        self.n = 0
        self.max_zeta_lg = 0.0
        self._rebuild(wbits)

    def _rebuild(self, wbits: int) -> None:
        self.bucket = wbits
        # extra bits: the exp arguments reach n*h*log(q) radians, and argument
        # reduction costs ~log2 of that in relative accuracy
        pad = 32 + max(0, int(math.log2(max(self.n, 1) * self.h_f * 4 + 4)))
        with local_precision(wbits + pad):
            self.lnp = mpmath.log(self.base)
            self.h = 2 * mpmath.pi / self.lnp
            i = mpc(0, 1)
            self.w_pi = mpmath.exp(-i * self.h * mpmath.log(mpmath.pi) / 2)
            self.w_qs = [mpmath.exp(-i * self.h * mpmath.log(q)) for q in self.others]
            n = self.n
            if n == 0:
                self.pow_pi = mpc(1)
                self.pow_qs = [mpc(1) for _ in self.others]
            else:
                self.pow_pi = mpmath.exp(-i * n * self.h * mpmath.log(mpmath.pi) / 2)
                self.pow_qs = [
                    mpmath.exp(-i * n * self.h * mpmath.log(q)) for q in self.others
                ]

    def next_height(self) -> float:
        return (self.n + 1) * self.h_f

    def pair(self, s, real_s: bool, wbits: int):
        """Advance to the next n and return (contribution, lg10 of the zeta
        factor), where contribution = res/(s-s0) + conj(res)/(s-conj(s0))."""
        if wbits > self.bucket:
            self._rebuild(wbits)
        self.n += 1
        n = self.n
        with local_precision(self.bucket):
            self.pow_pi = self.pow_pi * self.w_pi
            for i, w in enumerate(self.w_qs):
                self.pow_qs[i] = self.pow_qs[i] * w
        with local_precision(wbits):
            t = n * self.h
            s0 = mpc(0, t)
            den = mpf(1)
            for pw in self.pow_qs:
                den = den * (1 - pw)
            if den == 0:
                raise PoleError(
                    f"exact resonance hit at base {self.base}, n = {n} (working precision)"
                )
            zeta_rest = 1 / den
            lg_zeta = -mag10(den)
            if lg_zeta > self.max_zeta_lg:
                self.max_zeta_lg = lg_zeta
            gam = gamma_ghost(self.base, n, wbits)
            # the full s0 polynomial of the residue collapses:
            # s0^{m-1}(1-s0)^{m-1} * s0(s0-1)/2 * s0(1-s0) = -w^{m+1}/2,
            # with w = s0(1-s0) = t^2 + i t
            w = mpc(t * t, t)
            res = -mpmath.power(w, self.m + 1) / 2 * self.pow_pi * gam * zeta_rest / self.lnp
            if real_s:
                contrib = 2 * (res / (s - s0)).real
            else:
                res_c = mpmath.conj(res)
                contrib = res / (s - s0) + res_c / (s - mpmath.conj(s0))
            return contrib, lg_zeta


def _trivial_sum(B: BaseSet, s, real_s: bool, prec: PrecisionSpec, plan: TruncationPlan):
    """Sum over the Gamma-pole principal parts at s = -2n, with its tail."""
    W = prec.working_bits
    lg_threshold = float(plan.stop_threshold.log10_abs)
    m = B.m
    with local_precision(W):
        total = mpf(0) if real_s else mpc(0)
        pipow = mpf(1)
        gam = mpf(1)  # Gamma(n)
        b_pows = {b: 1 for b in B.bases}  # b^(2n), exact integers
        small_run = 0
        prev_lg = 0.0
        for n in range(1, plan.trivial_cap + 1):
            pipow = pipow * mpmath.pi
            if n >= 2:
                gam = gam * (n - 1)
            prod = mpf(1)
            for b in B.bases:
                b_pows[b] *= b * b
                prod = prod / (1 - mpf(b_pows[b]))
            zc = mpf(-2 * n) ** m * mpf(1 + 2 * n) ** m * prod
            sign = -1 if n % 2 else 1
            term = sign * 2 * pipow * (2 * n + 1) * zc / (gam * (s + 2 * n))
            total = total + term
            lg = mag10(term)
            if lg < lg_threshold - 0.35:
                small_run += 1
                if small_run >= plan.consecutive_small and lg < prev_lg:
                    dlg = max(lg - prev_lg, -8.0)
                    geom = -math.log10(1 - 10 ** min(dlg, -0.046))
                    tail = LogMagnitude.from_log10(1, lg + dlg + geom)
                    return total, tail
            else:
                small_run = 0
            prev_lg = lg
        raise NonConvergenceError("trivial-pole sum hit its cap before the stop rule")


def xi_pp(
    B: BaseSet,
    s,
    prec: PrecisionSpec = DEFAULT_PREC,
    plan: Optional[TruncationPlan] = None,
) -> PPValue:
    """Principal part of the pole-cleared completed product at s: ghost-pole
    sum (bases interleaved by pole height, conjugate pairs) plus the
    trivial-pole sum, each truncated by the plan's stop rule."""
    if plan is None:
        plan = default_plan(B, prec)
    W = prec.working_bits
    with local_precision(W):
        s = mpc(s) if isinstance(s, (mpc, complex)) else mpf(s)
        real_s = isinstance(s, mpf) or s.imag == 0
        if real_s and isinstance(s, mpc):
            s = s.real
        if nearest_ghost_pole_distance(B, s, prec) < mpmath.power(
            10, -(prec.target_digits // 2)
        ):
            raise PoleError(f"{s} is too close to a ghost pole of {B}")
        re = s.real if isinstance(s, mpc) else s
        im = s.imag if isinstance(s, mpc) else mpf(0)
        if im == 0 and re < 0 and re == mpmath.floor(re) and int(re) % 2 == 0:
            raise PoleError(f"{s} is a trivial pole")

        total, trivial_tail = _trivial_sum(B, s, real_s, prec, plan)

        if B.m == 0:
            return PPValue(total, trivial_tail, plan)

        abs_s = float(abs(s))
        A_target = prec.target_digits + prec.guard_digits
        lg_threshold = float(plan.stop_threshold.log10_abs)
        margin = 25

        # predict the term schedule and fill the gamma cache in parallel
        jobs = []
        for b in B.bases:
            lnp_f = math.log(b)
            peak_t = (2 * B.m + 2) * 1.3 + 4
            n = 0
            while n <= plan.ghost_cap.get(b, 0):
                n += 1
                lg_est = _pair_magnitude_estimate(B.m, lnp_f, n, abs_s)
                if lg_est < lg_threshold - 4 and n * 2 * math.pi / lnp_f > peak_t:
                    break
                digits_needed = A_target + lg_est + margin
                wbits = min(W, _bucket_bits(digits_to_bits(max(14, int(digits_needed)))))
                if wbits >= _CACHE_MIN_BITS:
                    hit = _gamma_cache.get((b, n))
                    if hit is None or hit[0] < wbits:
                        jobs.append((b, n, wbits))
        _prewarm_gamma(jobs)

        streams = {b: _BaseStream(b, B, W) for b in B.bases}
        heap = [(st.next_height(), b) for b, st in streams.items()]
        heapq.heapify(heap)
        small_run = 0
        ghost = mpf(0) if real_s else mpc(0)
        while heap:
            _, b = heapq.heappop(heap)
            st = streams[b]
            n_next = st.n + 1
            if n_next > plan.ghost_cap.get(b, 0):
                raise NonConvergenceError(
                    f"ghost cap reached for base {b} before the stop rule fired"
                )
            lg_est = _pair_magnitude_estimate(B.m, st.lnp_f, n_next, abs_s)
            digits_needed = A_target + lg_est + margin
            wbits = min(W, _bucket_bits(digits_to_bits(max(14, int(digits_needed)))))
            pair, lg_zeta = st.pair(s, real_s, wbits)
            # resonance spike beyond the margin: redo this term with the
            # observed zeta-factor magnitude folded into the precision
            if lg_zeta > 10 and wbits < W:
                wbits2 = min(
                    W, _bucket_bits(digits_to_bits(max(14, int(digits_needed + lg_zeta + 5))))
                )
                if wbits2 > wbits:
                    st.n -= 1
                    st._rebuild(wbits2)
                    pair, lg_zeta = st.pair(s, real_s, wbits2)
            with local_precision(W):
                ghost = ghost + pair
            if mag10(pair) < lg_threshold - 0.35:
                small_run += 1
            else:
                small_run = 0
            if small_run >= plan.consecutive_small:
                if all(
                    _tail_bound_lg(stm, B.m, abs_s) < lg_threshold
                    for stm in streams.values()
                ):
                    break
            heapq.heappush(heap, (st.next_height(), b))
        else:
            raise NonConvergenceError("ghost streams exhausted without stopping")

        tail = trivial_tail
        for st in streams.values():
            tail = log_add(
                tail,
                LogMagnitude.from_log10(1, _tail_bound_lg(st, B.m, abs_s) + 1.0),
            )
        with local_precision(W):
            value = total + ghost
        return PPValue(value, tail, plan)


def _tail_bound_lg(st: _BaseStream, m: int, abs_s: float) -> float:
    """log10 bound for the discarded terms of one base's stream: geometric
    continuation of the magnitude estimator from the next unevaluated index,
    widened by the worst zeta-resonance factor observed for this base."""
    nxt = _pair_magnitude_estimate(m, st.lnp_f, st.n + 1, abs_s)
    decay = math.pi * math.pi / (2 * st.lnp_f * math.log(10)) - (2 * m + 2) * math.log10(
        1.0 + 1.0 / max(st.n, 1)
    )
    if decay <= 0.05:
        decay = 0.05
    geom = -math.log10(1 - 10 ** (-decay)) if decay < 8 else 0.0
    return nxt + geom + st.max_zeta_lg + 1.0


# ---------------------------------------------------------------------------
# linear forms in logarithms (diagnostics, not load-bearing for termination)
# ---------------------------------------------------------------------------


def _check_pair(p: int, q: int) -> None:
    if p < 2 or q < 2:
        raise DomainError("bases must be >= 2")
    if multiplicatively_dependent(p, q):
        raise DomainError(f"{p} and {q} are multiplicatively dependent")


def linear_form_lower_bound(p: int, q: int, n: int) -> LogMagnitude:
    """Explicit lower bound for |eps| = |m log p - n log q| at the nearest
    integer m: exp(-36821 h log p log q) with h = max(log b + 3.1, 1000) and
    b = n/log p + m/log q.  Astronomically small; diagnostic use only."""
    _check_pair(p, q)
    if n < 1:
        raise DomainError("n must be >= 1")
    with local_precision(digits_to_bits(80)):
        lnp, lnq = mpmath.log(p), mpmath.log(q)
        m = int(mpmath.nint(n * lnq / lnp))
        b = n / lnp + m / lnq
        h = max(mpmath.log(b) + mpf("3.1"), mpf(1000))
        log10_eps = -36821 * h * lnp * lnq / mpmath.log(10)
        return LogMagnitude.from_log10(1, log10_eps)


def euler_factor_lower_bound(p: int, q: int, n: int, prec: PrecisionSpec = DEFAULT_PREC):
    """Certified lower bound for |1 - exp(-2 pi i n log q / log p)|.

    Small-eps regime: pi*eps/log p with eps = |m log p - n log q| minimized
    over integer m.  When pi*eps/log p > 1 the linearization is meaningless,
    so fall back to half the directly computed factor."""
    _check_pair(p, q)
    if n < 1:
        raise DomainError("n must be >= 1")
    with local_precision(prec.working_bits):
        lnp, lnq = mpmath.log(p), mpmath.log(q)
        m = int(mpmath.nint(n * lnq / lnp))
        eps = abs(m * lnp - n * lnq)
        linear = mpmath.pi * eps / lnp
        if linear <= 1:
            return linear
        direct = abs(1 - mpmath.exp(mpc(0, -2 * mpmath.pi * n * lnq / lnp)))
        return direct / 2


@dataclass(frozen=True)
class ResonancePair:
    """Two cross-base ghost poles closer than the reporting threshold."""

    base1: int
    n1: int
    base2: int
    n2: int
    gap: float
    res1_mag: LogMagnitude
    res2_mag: LogMagnitude
    combined_mag: LogMagnitude

    def csv_row(self) -> str:
        return (
            f"{self.base1},{self.n1},{self.base2},{self.n2},{self.gap:.6e},"
            f"{self.res1_mag.format(6)},{self.res2_mag.format(6)},{self.combined_mag.format(6)}"
        )


def resonance_report(B: BaseSet, T, prec: PrecisionSpec = DEFAULT_PREC):
    """Cross-base ghost-pole pairs below height T within 1e-3 of each other,
    with their residue magnitudes and the magnitude of the residue sum (the
    1/eps leading parts are expected to cancel)."""
    from .euler_core import ghost_poles, ghost_residue

    out = []
    poles = [g for g in ghost_poles(B, T, prec) if g.n > 0]
    for i, g1 in enumerate(poles):
        for g2 in poles[i + 1 :]:
            if g2.base == g1.base:
                continue
            gap = abs(g1.height - g2.height)
            if gap < 1e-3:
                r1 = ghost_residue(B, g1.base, g1.n, prec)
                r2 = ghost_residue(B, g2.base, g2.n, prec)
                out.append(
                    ResonancePair(
                        g1.base,
                        g1.n,
                        g2.base,
                        g2.n,
                        gap,
                        LogMagnitude.from_number(abs(r1)),
                        LogMagnitude.from_number(abs(r2)),
                        LogMagnitude.from_number(abs(r1 + r2)),
                    )
                )
    return out


def resonance_report_csv(pairs) -> str:
    lines = ["base1,n1,base2,n2,gap,res1,res2,combined"]
    lines += [p.csv_row() for p in pairs]
    return "\n".join(lines) + "\n"
