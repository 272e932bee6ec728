"""Exact prime utilities (desk scale: deterministic, no estimates)."""

from __future__ import annotations

import threading
from bisect import bisect_right
from typing import List

_lock = threading.RLock()
_sieve_limit = 0
_primes: List[int] = []


def _extend(limit: int) -> None:
    global _sieve_limit, _primes
    limit = max(limit, 2 * _sieve_limit, 1024)
    flags = bytearray([1]) * (limit + 1)
    flags[0:2] = b"\x00\x00"
    p = 2
    while p * p <= limit:
        if flags[p]:
            flags[p * p :: p] = bytearray(len(range(p * p, limit + 1, p)))
        p += 1
    with _lock:
        if limit > _sieve_limit:
            _primes = [i for i, f in enumerate(flags) if f]
            _sieve_limit = limit


def primes_upto(x: int) -> List[int]:
    """All primes <= x, ascending."""
    if x > _sieve_limit:
        _extend(x)
    return _primes[: bisect_right(_primes, x)]


def prime_count(x: int) -> int:
    """Exact pi(x) by sieve."""
    if x < 0:
        raise ValueError("prime_count requires x >= 0")
    if x < 2:
        return 0
    if x > _sieve_limit:
        _extend(x)
    return bisect_right(_primes, x)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n <= _sieve_limit:
        i = bisect_right(_primes, n)
        return i > 0 and _primes[i - 1] == n
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def next_prime(n: int) -> int:
    """Smallest prime > n."""
    k = n + 1
    while not is_prime(k):
        k += 1
    return k


def first_primes(k: int) -> List[int]:
    """The first k primes."""
    if k <= 0:
        return []
    limit = 16
    while True:
        ps = primes_upto(limit)
        if len(ps) >= k:
            return ps[:k]
        limit *= 2


def is_perfect_power_of(n: int, a: int) -> bool:
    """True iff n == a^k for some integer k >= 1."""
    if a < 2:
        return n == a
    v = a
    while v < n:
        v *= a
    return v == n


def largest_prime_factor(n: int) -> int:
    """P+(n); 1 for n = 1."""
    if n < 1:
        raise ValueError("requires n >= 1")
    best = 1
    d = 2
    while d * d <= n:
        while n % d == 0:
            best = d
            n //= d
        d += 1
    return max(best, n) if n > 1 else best


def factorize(n: int) -> dict:
    """Prime factorization {p: e} by trial division."""
    if n < 2:
        raise ValueError("requires n >= 2")
    out: dict = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def multiplicatively_dependent(p: int, q: int) -> bool:
    """True iff p and q are integer powers of a common base (equivalently,
    log p / log q is rational)."""
    fp, fq = factorize(p), factorize(q)
    if set(fp) != set(fq):
        return False
    ratio = None
    for r, e in fp.items():
        f = fq[r]
        if ratio is None:
            ratio = (e, f)
        elif e * ratio[1] != f * ratio[0]:
            return False
    return True
