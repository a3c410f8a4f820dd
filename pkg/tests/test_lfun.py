import math

import numpy as np
import pytest

from chowla import arith, family, lfun

PHI = (1 + math.sqrt(5)) / 2
L5 = 2 / math.sqrt(5) * math.log(PHI)  # h=1, eps=phi in the class number formula
L17 = 2 * math.log(4 + math.sqrt(17)) / math.sqrt(17)


def test_rigorous_closed_forms():
    lv = lfun.l_value_rigorous(5, 1e-6)
    assert lv.mode == "rigorous"
    assert abs(lv.value - L5) < lv.abs_error_bound <= 1e-6
    lv = lfun.l_value_rigorous(17, 1e-6)
    assert abs(lv.value - L17) < 1e-6


def test_rigorous_budget_error():
    with pytest.raises(lfun.BudgetError):
        lfun.l_value_rigorous(101, 1e-12, summand_cap=10**6)


def test_fast_mode_matches_rigorous():
    for d, want in ((5, L5), (101, None)):
        ref = want if want is not None else lfun.l_value_rigorous(d, 1e-7).value
        lv = lfun.l_value_fast(d, 1e4)
        assert lv.mode == "fast"
        assert abs(lv.value - ref) < 1e-3


def test_fast_mode_y_refinement():
    # successive y doublings move the value by decreasing amounts
    for m in (3, 7, 12, 25, 60):
        d = 4 * m * m + 1
        if not arith.factor_chowla(m).is_squarefree:
            continue
        vals = [lfun.l_value_fast(d, y).value for y in (5e3, 1e4, 2e4, 4e4)]
        deltas = [abs(b - a) for a, b in zip(vals, vals[1:])]
        assert deltas[-1] < deltas[0]


def test_fast_mode_rejects_small_y():
    with pytest.raises(ValueError):
        lfun.l_value_fast(10**6 + 2 * 10**3 + 1, 10.0)


def test_character_engines_agree():
    # period-tiling and multiplicative-fill must produce identical sums
    for m in (3, 6, 500):
        fac = arith.factor_chowla(m)
        if not fac.is_squarefree:
            continue
        d = fac.n
        n_max = 3 * d // 2
        period = lfun._chi_period(d, fac.prime_powers, d).astype(np.float64)
        plan = lfun._fill_plan(n_max)
        filled = plan.fill(d, up_to=n_max)
        tiled = np.resize(period, n_max + 1)
        tiled[0] = 0.0
        assert np.array_equal(tiled, filled[: n_max + 1])


def test_chi_zero_exactly_at_common_factors():
    fac = arith.factor_chowla(6)  # 145 = 5 * 29
    period = lfun._chi_period(145, fac.prime_powers, 145)
    zeros = np.flatnonzero(period == 0)
    assert set(zeros.tolist()) == {n for n in range(145) if n % 5 == 0 or n % 29 == 0}


def test_ell():
    assert abs(lfun.ell(5) - 1.54891) < 1e-4
    assert abs(lfun.ell(17) - 1.96837) < 1e-4
    grid = [5.0, 17.0, 100.0, 1e4, 1e8]
    vals = [lfun.ell(x) for x in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    x = 1e8
    assert abs(lfun.ell(x) * 2 * math.log(2 * math.sqrt(x)) / math.sqrt(x) - 1) < 0.02
    with pytest.raises(ValueError):
        lfun.ell(1.0)


def test_class_number_examples():
    res = lfun.class_number(5)
    assert res.h_true == 1 and res.h_paper == 2
    assert "nonstandard-unit" in res.flags and res.margin > 0.05
    res = lfun.class_number(17)
    assert res.h_true == 1 and res.h_paper == 2 and not res.flags
    res = lfun.class_number(677)
    assert res.h_true == lfun.forms_oracle(677) == 1


def test_forms_oracle_examples():
    assert lfun.forms_oracle(5) == 1
    assert lfun.forms_oracle(17) == 1
    assert lfun.forms_oracle(145) == lfun.class_number(145).h_true == 4
    with pytest.raises(lfun.BudgetError):
        lfun.forms_oracle(5, cap=4)


def test_forms_oracle_matches_formula_sample():
    for fd in family.enumerate_family(30000):
        assert lfun.forms_oracle(fd.d) == lfun.class_number(fd.d).h_true, fd.d


def test_positivity_and_littlewood_box():
    for fd in family.enumerate_family(3000):
        lv = lfun.l_value_rigorous(fd.d, 1e-4)
        assert 0.1 < lv.value < 10.0


def test_h_paper_is_twice_h_true():
    for fd in family.enumerate_family(10**5):
        if fd.m < 2:
            continue
        res = lfun.class_number(fd.d)
        assert res.h_paper == 2 * res.h_true, fd.d
