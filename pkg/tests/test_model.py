import math
import random
from fractions import Fraction

import numpy as np
import pytest

from chowla import arith, model


def test_prime_model_examples():
    pm = model.prime_model(2)
    assert (pm.alpha, pm.beta, pm.gamma) == (Fraction(1, 2), Fraction(1, 2), Fraction(0))
    pm = model.prime_model(5)
    assert (pm.alpha, pm.beta, pm.gamma) == (Fraction(5, 23), Fraction(10, 23), Fraction(8, 23))
    pm = model.prime_model(3)
    assert (pm.alpha, pm.beta, pm.gamma) == (Fraction(1, 3), Fraction(2, 3), Fraction(0))


def test_prime_model_identities_exact():
    for p in arith.prime_table(10**5).primes.tolist():
        if p == 2:
            continue
        pm = model.prime_model(p)
        assert pm.alpha + pm.beta + pm.gamma == 1
        c = pm.c
        assert pm.alpha - pm.beta == Fraction(-1, p) / (1 - Fraction(c, p * p))
        assert pm.alpha >= 0 and pm.beta >= 0 and pm.gamma >= 0


def test_expected_X_examples():
    assert model.expected_X(1) == 1
    assert model.expected_X(2) == 0
    assert model.expected_X(5) == Fraction(-5, 23)
    assert model.expected_X(3) == Fraction(-1, 3)
    assert model.expected_X(9) == 1
    assert model.expected_X(8) == 0  # odd power of 2


def test_expected_X_multiplicative():
    rng = random.Random(4)
    for _ in range(10_000):
        m = rng.randint(1, 1000)
        n = rng.randint(1, 1000)
        if math.gcd(m, n) != 1:
            continue
        assert model.expected_X(m * n) == model.expected_X(m) * model.expected_X(n)


def test_complete_char_sum_examples():
    assert model.complete_char_sum(3) == Fraction(-1, 3)
    assert model.complete_char_sum(5) == Fraction(-1, 5)
    assert model.complete_char_sum(4) == 1
    assert model.complete_char_sum_brute(3) == Fraction(-1, 3)
    assert model.complete_char_sum_brute(5) == Fraction(-1, 5)
    assert model.complete_char_sum_brute(4) == 1


def test_complete_char_sum_brute_is_plain_kronecker_sum():
    for m in (3, 4, 5, 12, 45, 90, 97):
        want = Fraction(sum(arith.kronecker(4 * n * n + 1, m) for n in range(1, m + 1)), m)
        assert model.complete_char_sum_brute(m) == want


def test_lemma_relation_sample():
    # expected_X(m) = complete_char_sum(m) * prod_{p|m odd} (1 - c/p^2)^(-1)
    for m in range(1, 400, 2):
        corr = Fraction(1)
        mm = m
        f = 3
        while f * f <= mm:
            if mm % f == 0:
                c = 2 if f % 4 == 1 else 0
                corr /= 1 - Fraction(c, f * f)
                while mm % f == 0:
                    mm //= f
            f += 2
        if mm > 1:
            c = 2 if mm % 4 == 1 else 0
            corr /= 1 - Fraction(c, mm * mm)
        assert model.expected_X(m) == model.complete_char_sum(m) * corr, m


def test_ep_values():
    assert model.ep(7, 0) == 1.0
    assert abs(model.ep(3, 1) - 1.0) < 1e-12
    exact = Fraction(5, 23) * Fraction(5, 4) + Fraction(10, 23) * Fraction(5, 6) + Fraction(8, 23)
    assert exact == Fraction(271, 276)
    assert abs(model.ep(5, 1) - float(exact)) < 1e-12
    with pytest.raises(OverflowError):
        model.ep(2, 5000.0)


def test_script_L_zero_and_one():
    assert model.script_L(0.0, 1e-12).value == 0.0
    s1 = model.script_L(1.0, 1e-9)
    # E[L] = prod E_p(1): partial products converge from below for real z=1
    prod = 1.0
    last = None
    for p in arith.prime_table(20000).primes.tolist():
        prod *= model.ep(p, 1)
    assert prod < math.exp(s1.value) < prod * 1.001


def test_script_L_tail_expansion_validated():
    """The analytic tail uses log E_p(r) = (r^2-r)/(2p^2) + remainder with
    |remainder| <= 1.5 (r^2+|r|)/p^3 + 2(|r|+1)^4/p^4 for p >= max(4|r|, 1e6);
    check against exact high-precision evaluation on a (r, p) grid."""
    import mpmath

    mpmath.mp.dps = 60
    for r in (0.5, -0.5, 2, -2, 10, -10, 100, -100, 1000, 10000, 100000, -100000):
        for p in (1000003, 1000033, 2000003, 5000011, 40000003, 400000009):
            if p < max(4.0 * abs(r), 1e6):
                continue
            c = 2 if p % 4 == 1 else 0
            pm = mpmath.mpf(p)
            k = 1 / (1 - mpmath.mpf(c) / pm**2)
            al = mpmath.mpf(1) / 2 * (1 - (c + 1) / pm) * k
            be = mpmath.mpf(1) / 2 * (1 - (c - 1) / pm) * k
            ga = mpmath.mpf(c) * (pm - 1) / (pm * pm - c)
            exact = float(mpmath.log(al * (1 - 1 / pm) ** (-r) + be * (1 + 1 / pm) ** (-r) + ga))
            rem = abs(exact - (r * r - r) / (2.0 * p * p))
            bound = 1.5 * (r * r + abs(r)) / p**3 + 2.0 * (abs(r) + 1.0) ** 4 / p**4
            assert rem <= bound, (r, p, rem, bound)


def test_script_L_error_contract():
    sl = model.script_L(100.0, 1e-6)
    assert sl.error_bound <= 1e-6
    with pytest.raises(ArithmeticError):
        model.script_L(100000.0, 1e-12)
    with pytest.raises(ValueError):
        model.script_L(1e6, 1.0)
    with pytest.raises(ValueError):
        model.script_L(100 + 20000j, 1.0)


def test_script_L_conjugate_symmetry():
    for z in (1 + 1j, 2 - 0.5j, 0.3 + 3j):
        a = model.script_L(z, 1e-6).value
        b = model.script_L(z.conjugate(), 1e-6).value
        assert abs(a.conjugate() - b) < 1e-12


def test_derivs_monotone_and_convex():
    grid = [2.0**k for k in range(0, 15)]
    d1 = [model.script_L_derivs(r, 1) for r in grid]
    assert all(b > a for a, b in zip(d1, d1[1:]))
    for r in (1e2, 1e3, 1e4, 1e5):
        v = model.script_L_derivs(r, 2)
        assert v > 0
        assert 0.5 < v * r * math.log(r) < 1.5  # frozen band around the 1/(r log r) law


def test_saddle_solutions():
    c0 = model.constants().C0
    # Newton converges from the e^(tau-C0) start over the whole grid
    prev_phi = prev_psi = None
    for k in range(0, 111):
        tau = 1.0 + 0.1 * k
        sad = model.solve_saddle(tau)
        assert sad.kappa > 0 and sad.L2_at > 0
        assert 0 < sad.phi < 1 and 0 < sad.psi < 1
        assert abs(model.script_L_derivs(sad.kappa, 1) - math.log(tau) - model.EULER_GAMMA) < 1e-9
        if k % 10 == 0 and prev_phi is not None:
            assert sad.phi < prev_phi and sad.psi < prev_psi
        if k % 10 == 0:
            prev_phi, prev_psi = sad.phi, sad.psi
    assert model.solve_saddle(1.5).advisory
    assert not model.solve_saddle(2.5).advisory


def test_saddle_kappa3_regression():
    sad = model.solve_saddle(3.0)
    assert abs(sad.kappa - 10.2692333222) < 1e-6


def test_saddle_asymptotics():
    c0 = model.constants().C0
    for tau in (6.0, 8.0, 10.0):
        sad = model.solve_saddle(tau)
        assert abs(math.log(sad.kappa) - (tau - c0)) <= 3.0 / tau


def test_perturbation_stability():
    # Phi(e^-lambda tau) = Phi(tau)(1 + O(lambda kappa)); frozen C = 250
    for tau in (4.0, 6.0, 8.0):
        sad = model.solve_saddle(tau)
        lam = 1e-3 / sad.kappa
        sad2 = model.solve_saddle(math.exp(-lam) * tau)
        assert abs(sad2.phi / sad.phi - 1.0) <= 1e-2 * sad.kappa * lam * 250


def test_phi_asymptotic():
    c0 = model.constants().C0
    val = model.phi_asymptotic(5.0)
    assert abs(val - math.exp(-math.exp(5.0 - c0) / 5.0)) < 1e-12
    neg = model.phi_asymptotic_neg_log(5.0)
    assert abs(math.log(neg) - (5.0 - c0 - math.log(5.0))) < 5e-13
    assert model.phi_asymptotic(30.0) == 0.0  # underflow allowed
    with pytest.raises(ValueError):
        model.phi_asymptotic(1.0)
    for tau in (6.0, 8.0, 10.0):
        sad = model.solve_saddle(tau)
        ratio = math.log(-sad.log_phi) / math.log(model.phi_asymptotic_neg_log(tau))
        assert abs(ratio - 1.0) < 0.05


def test_constants():
    c = model.constants()
    assert abs(c.C0 - 0.8187) < 5e-4
    assert 0.9159 <= c.catalan_G <= 0.9160
    assert abs(c.catalan_G - 0.9159655941772190) < 1e-10
    assert abs(c.zeta2 - math.pi**2 / 6) < 1e-15
    assert abs(c.C1 - c.density_constant / 2) < 1e-15
    assert all(v <= 1e-9 for k, v in c.error_bounds.items() if k != "density_constant")
    v1, _ = model.compute_C0(refine=1)
    v2, _ = model.compute_C0(refine=2)
    assert abs(v1 - v2) < 1e-10


def test_sampler_determinism_and_mean():
    a = model.sample_L(7, 5000)
    b = model.sample_L(7, 5000)
    assert np.array_equal(a, b)
    c = model.sample_L(8, 5000)
    assert not np.array_equal(a, c)
    # block partitioning must not change values
    whole = model.sample_L(3, 40000)
    parts = np.concatenate([model._sample_block(3, 0, 15000, 1000), model._sample_block(3, 15000, 40000, 1000)])
    assert np.array_equal(whole, parts)
    with pytest.raises(ValueError):
        model.sample_L(0, 10, p_mc=10)

    draws = model.sample_L(0, 10**6)
    want = math.exp(model.script_L(1.0, 1e-9).value)
    se = draws.std() / math.sqrt(len(draws))
    assert abs(draws.mean() - want) < 4 * se


def test_model_tail_rows():
    rows = model.model_tail_rows([2.0, 3.0], 200000, seed=0)
    for row in rows:
        assert 0.5 < row["ratio_phi"] < 2.0
        assert 0.5 < row["ratio_psi"] < 2.0
    assert rows[0]["empirical_phi"] > rows[1]["empirical_phi"]
