"""Exact integer arithmetic: primes, Kronecker symbols, factorization of
4m^2+1, Jacobsthal sums, and fundamental units via continued fractions.

Everything in this module is exact.  Floating point appears only inside
UnitInfo, where the unit (a + b*sqrt(d))/2 and its logarithm (the regulator)
are carried as mpmath reals with at least 80 effective mantissa bits, because
the regulator later divides a quantity that must round to an integer class
number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import mpmath
import numpy as np

__all__ = [
    "PrimeTable",
    "SquarefreeFactorization",
    "UnitInfo",
    "c_of",
    "factor_chowla",
    "fundamental_unit",
    "is_prime",
    "jacobsthal_sum",
    "kronecker",
    "pell_pm1",
    "sqrt_minus_one_mod",
]

# mpmath precision for units/regulators.  112 bits comfortably exceeds the
# 80-bit requirement and matches one quad-precision word.
_UNIT_PREC_BITS = 112

_MAX_D = 2**63  # discriminants beyond this are refused


# ----------------------------------------------------------------------------
# primality
# ----------------------------------------------------------------------------

# Deterministic Miller-Rabin witness set, valid for all n < 3.3 * 10^24
# (Sorenson & Webster), far beyond the 2^63 cap used here.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic primality test for n < 3.3e24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeTable:
    """Sieve of all primes up to ``limit`` with O(1) membership queries.

    Immutable after construction; safe to share across threads/processes.
    ``residues_mod4[i]`` is ``primes[i] % 4`` (the class that decides
    c(p) = 1 + (-1/p)).
    """

    def __init__(self, limit: int):
        if limit < 2:
            limit = 2
        self.limit = int(limit)
        sieve = np.ones(self.limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, math.isqrt(self.limit) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        self._sieve = sieve
        self.primes = np.flatnonzero(sieve).astype(np.int64)
        self.residues_mod4 = (self.primes % 4).astype(np.int8)

    def __contains__(self, n: int) -> bool:
        if not 0 <= n <= self.limit:
            raise ValueError(f"membership query {n} outside table limit {self.limit}")
        return bool(self._sieve[n])

    def __len__(self) -> int:
        return len(self.primes)

    def primes_1mod4(self) -> np.ndarray:
        return self.primes[self.residues_mod4 == 1]

    def iter_primes(self) -> Iterator[int]:
        return iter(self.primes.tolist())


_prime_table_cache: dict[int, PrimeTable] = {}


def prime_table(limit: int) -> PrimeTable:
    """Shared PrimeTable cache; returns a table with at least this limit.

    Limits are rounded up to a power of two so that growing demands reuse
    one table instead of resieving slightly larger ranges repeatedly.
    """
    for lim, tab in _prime_table_cache.items():
        if lim >= limit:
            return tab
    bucket = 1 << max(int(limit) - 1, 1).bit_length()
    tab = PrimeTable(bucket)
    _prime_table_cache.clear()
    _prime_table_cache[tab.limit] = tab
    return tab


# ----------------------------------------------------------------------------
# Kronecker symbol
# ----------------------------------------------------------------------------


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for arbitrary integer d and n >= 0.

    Binary-GCD style reciprocity recursion, O(log) per call and no
    factorization.  Completely multiplicative in n; for d > 0 with
    d = 1 mod 4 it is the real primitive character mod d.
    """
    if n < 0:
        raise ValueError("kronecker: n must be non-negative")
    if n == 0:
        return 1 if d in (1, -1) else 0
    if d % 2 == 0 and n % 2 == 0:
        return 0
    sign = 1
    # split off the even part of n; (d/2) depends on d mod 8
    twos = 0
    while n % 2 == 0:
        n //= 2
        twos += 1
    if twos % 2 == 1 and d % 8 in (3, 5):
        sign = -sign
    # Jacobi recursion on odd n; (a/n) is periodic in a mod n for odd n > 0,
    # so python's non-negative remainder already absorbs negative d.
    a = d % n
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def c_of(p: int) -> int:
    """c(p) = 1 + (-1/p) for an odd prime: 2 if p = 1 mod 4, else 0."""
    if p == 2:
        raise ValueError("c(2) is not used; the prime 2 is handled separately")
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"c_of expects an odd prime, got {p}")
    return 2 if p % 4 == 1 else 0


# ----------------------------------------------------------------------------
# factorization of 4m^2+1
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SquarefreeFactorization:
    """Exact factorization of n = 4m^2+1 with a squarefree verdict."""

    n: int
    prime_powers: tuple[tuple[int, int], ...]
    is_squarefree: bool

    def __post_init__(self):
        prod = 1
        for p, e in self.prime_powers:
            prod *= p**e
        if prod != self.n:
            raise ValueError("prime_powers do not multiply to n")


def _pollard_brent(n: int) -> int:
    """One nontrivial factor of composite odd n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    x0 = 2
    c = 1
    while True:
        x = y = x0
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
        c += 1
        x0 += 1


def factor_chowla(m: int) -> SquarefreeFactorization:
    """Factor n = 4m^2+1 exactly.

    All prime divisors of 4m^2+1 are 1 mod 4 (since (2m)^2 = -1 mod p), so
    trial division runs over primes p = 1 mod 4 up to n^(1/3) only; the
    remaining cofactor is 1, a prime, a prime square, or a semiprime, and
    is classified by a deterministic primality test plus an integer square
    root (a semiprime cofactor is split by Pollard-Brent).
    """
    if m < 1:
        raise ValueError("factor_chowla expects m >= 1")
    n = 4 * m * m + 1
    if n > _MAX_D:
        raise OverflowError(f"4m^2+1 = {n} exceeds the supported 2^63 cap")
    powers: list[tuple[int, int]] = []
    cbrt = round(n ** (1.0 / 3.0))
    while cbrt**3 > n:
        cbrt -= 1
    while (cbrt + 1) ** 3 <= n:
        cbrt += 1
    tab = prime_table(max(cbrt, 16))
    rest = n
    for p in tab.primes_1mod4().tolist():
        if p > cbrt or p * p > rest:
            break
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            powers.append((p, e))
    if rest > 1:
        # cofactor has no factor <= n^(1/3): at most two prime factors
        if is_prime(rest):
            powers.append((rest, 1))
        else:
            r = math.isqrt(rest)
            if r * r == rest and is_prime(r):
                powers.append((r, 2))
            else:
                f = _pollard_brent(rest)
                g = rest // f
                if not (is_prime(f) and is_prime(g)) or f * g != rest:
                    raise ArithmeticError(f"cofactor {rest} did not split as a semiprime")
                powers.extend(sorted([(f, 1), (g, 1)]) if f != g else [(f, 2)])
    powers.sort()
    squarefree = all(e == 1 for _, e in powers)
    return SquarefreeFactorization(n=n, prime_powers=tuple(powers), is_squarefree=squarefree)


# ----------------------------------------------------------------------------
# Jacobsthal sums
# ----------------------------------------------------------------------------


def jacobsthal_sum(p: int) -> int:
    """Brute-force sum over m = 0..p-1 of the Legendre symbol ((4m^2+1)/p).

    The classical identity says this is -1 for every odd prime p; this
    routine computes it directly so the identity can be tested, not assumed.
    """
    if p == 2 or not is_prime(p):
        raise ValueError(f"jacobsthal_sum expects an odd prime, got {p}")
    pm = np.int64(p)
    table = np.full(p, -1, dtype=np.int8)
    res = np.arange(p, dtype=np.int64)
    table[(res * res) % pm] = 1
    table[0] = 0
    vals = table[(4 * res * res + 1) % pm]
    return int(vals.sum(dtype=np.int64))


# ----------------------------------------------------------------------------
# square roots of -1 mod p^k (used by the squarefree sieve)
# ----------------------------------------------------------------------------


def sqrt_minus_one_mod(p: int, k: int = 1) -> int:
    """A solution of s^2 = -1 mod p^k for a prime p = 1 mod 4 (Hensel lift)."""
    if p % 4 != 1 or not is_prime(p):
        raise ValueError(f"-1 is not a square mod {p}")
    # g^((p-1)/4) works for any quadratic nonresidue g
    g = 2
    while pow(g, (p - 1) // 2, p) != p - 1:
        g += 1
    s = pow(g, (p - 1) // 4, p)
    mod = p
    for _ in range(k - 1):
        new_mod = mod * p
        # lift: (s + t*mod)^2 = -1 mod new_mod
        t = (-(s * s + 1) // mod) * pow(2 * s, -1, p) % p
        s = (s + t * mod) % new_mod
        mod = new_mod
    if pow(s, 2, mod) != mod - 1:
        raise ArithmeticError("Hensel lift failed")
    return s


# ----------------------------------------------------------------------------
# Pell equations and fundamental units
# ----------------------------------------------------------------------------


def pell_pm1(d: int) -> tuple[int, int, int]:
    """Minimal (x, y, s) with x^2 - d*y^2 = s, s in {+1, -1}, via the
    continued fraction of sqrt(d).  d must be a positive nonsquare."""
    a0 = math.isqrt(d)
    if a0 * a0 == d:
        raise ValueError(f"{d} is a perfect square")
    # standard recurrence for the CF of sqrt(d)
    m, q, a = 0, 1, a0
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    period = 0
    while True:
        m = a * q - m
        q = (d - m * m) // q
        a = (a0 + m) // q
        period += 1
        if q == 1:
            break
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    s = -1 if period % 2 == 1 else 1
    assert h * h - d * k * k == s
    return h, k, s


@dataclass
class UnitInfo:
    """Fundamental unit (a + b*sqrt(d))/2 of Q(sqrt(d)), d = 1 mod 4.

    a, b are the smallest positive integers with a^2 - b^2 d = +-4;
    norm_sign records which sign is attained.  epsilon and regulator are
    mpmath reals (>= 80-bit mantissa).
    """

    d: int
    a: int
    b: int
    norm_sign: int
    epsilon: mpmath.mpf = field(repr=False)
    regulator: mpmath.mpf = field(repr=False)

    @property
    def regulator_float(self) -> float:
        return float(self.regulator)


def fundamental_unit(d: int) -> UnitInfo:
    """Fundamental unit of the maximal order of Q(sqrt(d)) for d = 1 mod 4.

    Computes the Z[sqrt(d)] unit x + y*sqrt(d) from the continued fraction
    of sqrt(d), then tests exactly whether it is the cube of a half-integer
    unit (a + b*sqrt(d))/2 with a, b odd.  The unit index [O_K^x : Z[sqrt(d)]^x]
    is 1 or 3, so this finds the true fundamental unit in every case
    (d = 5 is the classical index-3 example: (1+sqrt(5))/2 cubed is 2+sqrt(5)).
    """
    if d <= 0 or d % 4 != 1:
        raise ValueError(f"fundamental_unit expects positive d = 1 mod 4, got {d}")
    if d > _MAX_D:
        raise OverflowError(f"d = {d} exceeds the supported 2^63 cap")
    if math.isqrt(d) ** 2 == d:
        raise ValueError(f"{d} is a perfect square")
    x1, y1, s1 = pell_pm1(d)
    a, b, norm = 2 * x1, 2 * y1, s1

    # cube-root test: does (a'+b'*sqrt(d))/2 with a', b' odd cube to x1+y1*sqrt(d)?
    with mpmath.workprec(max(_UNIT_PREC_BITS, x1.bit_length() // 3 + 96)):
        sq = mpmath.sqrt(d)
        u = x1 + y1 * sq
        eps = mpmath.cbrt(u)
        # eps - N/eps = b'*sqrt(d) with N = norm of the candidate ( = s1 )
        b_cand = int(mpmath.nint((eps - s1 / eps) / sq))
    if b_cand >= 1 and b_cand % 2 == 1:
        aa_sq = b_cand * b_cand * d + 4 * s1
        if aa_sq > 0:
            a_cand = math.isqrt(aa_sq)
            if (
                a_cand * a_cand == aa_sq
                and a_cand % 2 == 1
                # exact cube check in Z[(1+sqrt(d))/2]
                and a_cand * (a_cand * a_cand + 3 * b_cand * b_cand * d) == 8 * x1
                and b_cand * (3 * a_cand * a_cand + b_cand * b_cand * d) == 8 * y1
            ):
                a, b, norm = a_cand, b_cand, s1

    with mpmath.workprec(_UNIT_PREC_BITS):
        eps = (a + b * mpmath.sqrt(d)) / 2
        reg = mpmath.log(eps)
    assert a * a - b * b * d == 4 * norm
    return UnitInfo(d=d, a=a, b=b, norm_sign=norm, epsilon=eps, regulator=reg)
