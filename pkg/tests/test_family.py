import math

import numpy as np
import pytest

from chowla import arith, family


def test_enumerate_examples():
    assert [fd.d for fd in family.enumerate_family(30)] == [5, 17]
    assert [fd.d for fd in family.enumerate_family(5)] == [5]
    # m = 9 gives 325 = 5^2 * 13, excluded; 401 > 400 excluded
    assert [fd.d for fd in family.enumerate_family(400)] == [5, 17, 37, 65, 101, 145, 197, 257]


def test_enumerate_requires_x_ge_5():
    with pytest.raises(ValueError):
        list(family.enumerate_family(4))
    with pytest.raises(OverflowError):
        family.members_m_array(2e12)


def test_member_fields():
    fd = next(iter(family.enumerate_family(5)))
    assert fd.m == 1 and fd.d == 5
    assert abs(fd.regulator_paper - math.log(2 + math.sqrt(5))) < 1e-15
    assert fd.cached_L is None and fd.cached_h is None


def test_prefix_property():
    small = family.members_m_array(10**4).tolist()
    big = family.members_m_array(10**5).tolist()
    assert big[: len(small)] == small


def test_sieve_agrees_with_factorization():
    mask = family.member_mask(2500)  # covers x = 2.5e7
    for m in range(1, 2501):
        assert bool(mask[m]) == arith.factor_chowla(m).is_squarefree, m


def test_counts_and_density():
    fc = family.count_and_compare(10**6)
    assert fc.count == int(family.member_mask(499).sum())
    assert abs(fc.count - fc.predicted) < fc.uncertainty
    dens, err = family.density_constant(10**7)
    dens2, _ = family.density_constant(2 * 10**7)
    assert abs(dens - dens2) < 1e-10
    assert err < 1e-7
    # density = prod over p = 1 mod 4 of (1 - 2/p^2): crude partial product brackets
    partial = 1.0
    for p in arith.prime_table(1000).primes_1mod4().tolist():
        partial *= 1 - 2.0 / (p * p)
    assert dens < partial < dens + 2e-3


def test_count_sqrt_convergence():
    dens, _ = family.density_constant()
    prev = None
    for x in (10**6, 10**7, 10**8):
        count = int(family.member_mask(family._m_limit(x)).sum())
        dev = abs(count / math.sqrt(x) - dens / 2.0)
        assert dev < 10.0 * x ** (-1.0 / 6.0)
        if prev is not None:
            assert dev <= prev + 10.0 * x ** (-1.0 / 6.0)
        prev = dev
