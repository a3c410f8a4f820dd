import math
import random
from fractions import Fraction

import gmpy2
import numpy as np
import pytest

from chowla import arith


def test_kronecker_examples():
    assert arith.kronecker(5, 1) == 1
    assert arith.kronecker(5, 4) == 1
    assert arith.kronecker(5, 2) == -1


def test_kronecker_matches_gmpy2():
    rng = random.Random(20250810)
    for _ in range(100_000):
        d = rng.randint(-3000, 3000)
        n = rng.randint(0, 3000)
        assert arith.kronecker(d, n) == gmpy2.kronecker(d, n), (d, n)


def test_kronecker_completely_multiplicative():
    rng = random.Random(1)
    for _ in range(100_000):
        d = rng.randint(-400, 400)
        m = rng.randint(0, 400)
        n = rng.randint(0, 400)
        assert arith.kronecker(d, m * n) == arith.kronecker(d, m) * arith.kronecker(d, n)


def test_kronecker_periodicity_d_1mod4():
    for d in (5, 17, 37, 65):
        for n in range(0, 3 * d):
            assert arith.kronecker(d, n) == arith.kronecker(d, n + d)


def test_kronecker_is_legendre_on_primes():
    # brute-force quadratic residues mod p
    for p in (3, 5, 7, 11, 13, 17, 19, 23):
        squares = {pow(x, 2, p) for x in range(1, p)}
        for a in range(0, p):
            want = 0 if a == 0 else (1 if a in squares else -1)
            assert arith.kronecker(a, p) == want


def test_kronecker_rejects_negative_n():
    with pytest.raises(ValueError):
        arith.kronecker(5, -1)


def test_prime_table():
    tab = arith.PrimeTable(100)
    assert tab.primes.tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]
    assert 97 in tab and 91 not in tab
    assert np.all(np.diff(tab.primes) > 0)
    assert tab.primes_1mod4().tolist() == [5, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97]


def test_is_prime_against_table():
    tab = arith.prime_table(10_000)
    for n in range(2, 10_000):
        assert arith.is_prime(n) == (n in tab)


def test_c_of():
    assert arith.c_of(5) == 2
    assert arith.c_of(3) == 0
    assert arith.c_of(13) == 2
    with pytest.raises(ValueError):
        arith.c_of(2)
    with pytest.raises(ValueError):
        arith.c_of(15)


def test_factor_chowla_examples():
    f = arith.factor_chowla(1)
    assert f.n == 5 and f.prime_powers == ((5, 1),) and f.is_squarefree
    f = arith.factor_chowla(9)
    assert f.n == 325 and f.prime_powers == ((5, 2), (13, 1)) and not f.is_squarefree
    f = arith.factor_chowla(6)
    assert f.prime_powers == ((5, 1), (29, 1)) and f.is_squarefree


def naive_squarefree(n: int) -> bool:
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 1
    return True


def test_factor_chowla_squarefree_matches_naive():
    for m in range(1, 2000):
        f = arith.factor_chowla(m)
        assert f.is_squarefree == naive_squarefree(f.n), m
        prod = 1
        for p, e in f.prime_powers:
            prod *= p**e
            assert p % 4 == 1  # divisors of 4m^2+1 are 1 mod 4
        assert prod == f.n


def test_factor_chowla_overflow():
    with pytest.raises(OverflowError):
        arith.factor_chowla(10**10)


def test_jacobsthal_small():
    # terms for p=5, m=0..4: 1, 0, -1, -1, 0
    assert arith.jacobsthal_sum(5) == -1
    assert arith.jacobsthal_sum(3) == -1
    with pytest.raises(ValueError):
        arith.jacobsthal_sum(2)
    with pytest.raises(ValueError):
        arith.jacobsthal_sum(9)


def test_sqrt_minus_one_mod():
    for p in (5, 13, 17, 29, 101, 10007 + 6):  # 10013 = 17*19*31 not prime; fix below
        if not arith.is_prime(p) or p % 4 != 1:
            continue
        for k in (1, 2):
            s = arith.sqrt_minus_one_mod(p, k)
            assert pow(s, 2, p**k) == p**k - 1
    with pytest.raises(ValueError):
        arith.sqrt_minus_one_mod(7)


def test_pell_pm1():
    assert arith.pell_pm1(5) == (2, 1, -1)
    assert arith.pell_pm1(13) == (18, 5, -1)
    assert arith.pell_pm1(7) == (8, 3, 1)
    with pytest.raises(ValueError):
        arith.pell_pm1(16)


def test_fundamental_unit_examples():
    u = arith.fundamental_unit(5)
    assert (u.a, u.b, u.norm_sign) == (1, 1, -1)
    assert abs(float(u.epsilon) - (1 + math.sqrt(5)) / 2) < 1e-14
    u = arith.fundamental_unit(17)
    assert (u.a, u.b, u.norm_sign) == (8, 2, -1)
    assert abs(float(u.epsilon) - (4 + math.sqrt(17))) < 1e-12
    # d = 21: unit (5 + sqrt(21))/2 of norm +1
    u = arith.fundamental_unit(21)
    assert (u.a, u.b, u.norm_sign) == (5, 1, 1)


def test_fundamental_unit_family_claim():
    # eps = 2m + sqrt(d) for every squarefree member except m = 1
    import mpmath

    for m in list(range(2, 120)) + [500, 999, 1000]:
        f = arith.factor_chowla(m)
        if not f.is_squarefree:
            continue
        u = arith.fundamental_unit(f.n)
        assert (u.a, u.b) == (4 * m, 2), m
        with mpmath.workprec(112):
            want = 2 * m + mpmath.sqrt(f.n)
            assert abs(u.epsilon - want) <= abs(want) * mpmath.mpf(2) ** -100


def test_fundamental_unit_minimality_exhaustive():
    # no smaller b solves a^2 - b^2 d = +-4, for a spread of d <= 1e5
    rng = random.Random(3)
    ds = [5, 13, 17, 21, 29, 33, 37, 41, 53, 61, 73, 89, 97] + [
        4 * m * m + 1 for m in range(2, 40)
    ] + [rng.randrange(1, 25000) * 4 + 1 for _ in range(40)]
    for d in ds:
        if d > 10**5 or math.isqrt(d) ** 2 == d:
            continue
        u = arith.fundamental_unit(d)
        assert u.a * u.a - u.b * u.b * d == 4 * u.norm_sign
        assert float(u.regulator) > 0
        for b in range(1, u.b):
            for sign in (4, -4):
                aa = b * b * d + sign
                if aa > 0:
                    a = math.isqrt(aa)
                    assert a * a != aa, (d, b)


def test_fundamental_unit_rejects_bad_input():
    with pytest.raises(ValueError):
        arith.fundamental_unit(8)
    with pytest.raises(ValueError):
        arith.fundamental_unit(9)
