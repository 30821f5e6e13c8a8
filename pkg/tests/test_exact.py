import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from bootperc import exact, oracle

LAM = exact.default_context()
HP = mpmath.workprec(LAM.precision_bits)


def series_float(x):
    return sum((-1) ** k * x**k / (2 ** (k * k - k) * math.factorial(k)) for k in range(25))


# --- lambda -----------------------------------------------------------------


def test_lambda_root_against_float_brent():
    ctx = exact.lambda_root(1e-8)
    ref = brentq(series_float, 1.0, 1.2, xtol=1e-15)
    assert abs(float(ctx.lam) - ref) < 1e-8
    assert abs(float(ctx.lam) - 1.16577) < 5e-5
    assert 1 < ctx.lam < 1.2


def test_series_sign_change():
    assert series_float(1.0) > 0 > series_float(1.2)
    # 1 - x + x^2/8 - x^3/384 + ... at x=1
    partial = 1 - 1 + 1 / 8 - 1 / 384 + 1 / (2**12 * 24) - 1 / (2**20 * 120)
    assert series_float(1.0) == pytest.approx(partial, abs=1e-11)


def test_lambda_root_rejects_bad_tolerance():
    for tol in (0, -1e-9, 1e-3):
        with pytest.raises(exact.NumericError):
            exact.lambda_root(tol)


def test_high_precision_root_agrees_with_mpmath_findroot():
    with mpmath.workprec(160):
        f = lambda x: mpmath.nsum(lambda k: (-1) ** k * x**k / (2 ** (k * k - k) * mpmath.factorial(k)), [0, mpmath.inf])
        ref = mpmath.findroot(f, mpmath.mpf("1.165"))
        assert abs(LAM.lam - ref) < mpmath.mpf(10) ** -28


def test_a1_is_lambda_and_ratio():
    with HP:
        _a1_checks()


def _a1_checks():
    assert mpmath.almosteq(exact.a_m(LAM, 1), LAM.lam, rel_eps=mpmath.mpf(2) ** -100)
    assert mpmath.almosteq(exact.a_m_log(LAM, 1), mpmath.log(LAM.lam), rel_eps=mpmath.mpf(2) ** -100)
    for m in range(1, 61):
        ratio = exact.a_m(LAM, m) / exact.a_m(LAM, m + 1)
        assert abs(ratio / (mpmath.mpf(2) ** (2 * m) * (m + 1) / LAM.lam) - 1) < 1e-10


def test_a_m_dominates_tail_to_60():
    a = [exact.a_m(LAM, m) for m in range(1, 90)]
    for m in range(60):
        assert a[m] > mpmath.fsum(a[m + 1 :])


def test_a_m_log_does_not_underflow():
    v = exact.a_m_log(LAM, 200)
    assert mpmath.isfinite(v) and v < -27000


def test_am_properties_to_30():
    checks = exact.am_property_checks(30)
    assert {c.part for c in checks} >= set("abcde")
    assert [c for c in checks if not c.ok] == []


# --- spanning counts ------------------------------------------------------


def test_spanning_counts_known_values():
    t = exact.spanning_counts(3)
    assert [t.exact(l) for l in range(4)] == [1, 2, 144, 116160]


def test_spanning_counts_agree_with_enumeration_up_to_dim_4():
    for ell in (1, 2):
        assert len(oracle.sequential_sets(ell)) == exact.s_value(ell)


def test_two_routes_to_s_agree():
    via_g = exact.s_via_normalized(60, LAM)
    for ell in range(61):
        assert abs(via_g[ell] / exact.s_value(ell) - 1) < 1e-9


def test_g_normalized_values():
    with HP:
        _g_checks()


def _g_checks():
    assert exact.g_normalized(0) == 1
    assert mpmath.almosteq(exact.g_normalized(1), LAM.lam / 2)
    lo, hi = 1 - LAM.lam / 2, LAM.lam / 2
    # g(0) = 1 sits above lambda/2; the two-sided bound starts at l = 1
    for ell in range(1, 201):
        assert lo <= exact.g_normalized(ell) <= hi
    assert abs(exact.g_normalized(200) - 0.4976) < 1e-3


# --- star tables ------------------------------------------------------------


def test_star_table_base_cases_and_printed_examples():
    st_ = exact.star_tables(7)
    assert st_.pstar.exact(3) == st_.rstar.exact(3) == 32
    assert st_.pstar.exact(4) == st_.rstar.exact(4) == 144
    assert st_.ystar.upper(6) == 11520
    assert float(st_.ratio(6)) <= 0.794
    assert st_.rstar.lower(5) == 4608
    assert st_.ystar.upper(7) == 1720320
    assert float(st_.ratio(7)) <= 0.116


def test_star_tables_are_tagged_consistently():
    st_ = exact.star_tables(50)
    for dim in st_.pstar.keys():
        assert st_.pstar.lower(dim) <= st_.pstar.upper(dim)
        assert st_.rstar.lower(dim) <= st_.rstar.upper(dim)
        assert st_.pstar.upper(dim) == st_.rstar.upper(dim) + st_.ystar.upper(dim)
        assert all(isinstance(bv.value, int) for bv in st_.pstar.entries[dim])


def test_star_tables_bound_exact_enumeration():
    st_ = exact.star_tables(3)
    rep = oracle.enumerate_counts(5, 4)
    assert rep.pstar <= st_.pstar.upper(5) and rep.rstar >= st_.rstar.lower(5)
    assert rep.ystar <= st_.ystar.upper(5)


def test_star_tables_guard():
    with pytest.raises(ValueError):
        exact.star_tables(61)


# --- probabilities ----------------------------------------------------------


def test_q_exact_small_cases():
    for p in (0.0, 0.01, 0.3, 1.0):
        assert exact.q_exact(0, p) == pytest.approx(p)
        assert exact.q_exact(1, p) == pytest.approx(2 * p**2 * (1 - p) ** 2)
    # 16 cells, 3 infected: the empty cells contribute (1-p)^13
    assert exact.q_exact(2, 0.02) == pytest.approx(144 * 0.02**3 * 0.98**13, rel=1e-12)


def test_q_exact_matches_sequential_enumeration():
    # Q(4,p) from counting sequential sets by size; only size 3 contributes
    p = Fraction(1, 50)
    q = len(oracle.sequential_sets(2)) * p**3 * (1 - p) ** 13
    with HP:
        assert abs(exact.q_exact(2, p) - mpmath.mpf(q.numerator) / q.denominator) < 1e-25


def test_r2ell_coefficient_is_lambda_free():
    for ell in range(2, 12):
        for m in range(1, ell + 1):
            c = exact.r2ell_coefficient(ell, m)
            want = Fraction(
                2**m * math.factorial(2 * ell) * 2 ** (ell**2 - (ell - m) ** 2),
                math.factorial(m) * math.factorial(2 * ell - 2 * m) * 2 ** (m * m),
            )
            assert c == want
            assert abs(exact.r2ell_coefficient_float(ell, m) / c - 1) < 1e-30
    assert (exact.r2ell_coefficient(2, 1), exact.r2ell_coefficient(2, 2)) == (96, 48)


def test_r2ell_rhs_matches_enumerated_polynomial_exactly():
    P = {k: oracle.span_polynomial(k) for k in (0, 2)}
    R4 = oracle.r_event_polynomial(4)
    for p in (Fraction(1, 100), Fraction(1, 1000), Fraction(3, 77)):
        rhs = exact.r2ell_rhs(2, p, {k: P[k].evaluate(p) for k in P})
        assert rhs == R4.evaluate(p)
    assert exact.r2ell_rhs(2, 0, {2: 0, 0: 0}) == 0
    with pytest.raises(ValueError):
        exact.r2ell_rhs(2, 0.01, {2: 0.1})


def test_sandwich_contains_exact_leading_coefficients():
    even = exact.thm_coefficients(2)
    lam = LAM.lam
    assert mpmath.almosteq(even.even_upper, 384 / lam**2)
    assert even.even_lower <= 144 <= even.even_upper
    assert abs(even.even_lower - 113.02) < 0.01 and abs(even.even_upper - 282.56) < 0.01
    odd = exact.thm_coefficients(1)
    assert mpmath.almosteq(odd.odd_upper, 5 * 96 / lam)
    assert odd.odd_lower <= oracle.span_polynomial(3).leading()[1] == 32 <= odd.odd_upper
    one = exact.thm_coefficients(1)
    assert one.even_lower <= oracle.span_polynomial(2).leading()[1] == 2 <= one.even_upper


def test_sandwich_bounds_regime_and_order():
    for ell in range(1, 8):
        pmax = 0.01 / (ell * ell * 4**ell)
        for frac in (0.0, 0.1, 0.5, 0.999):
            b = exact.thm_bounds(ell, pmax * frac)
            assert b.even_lower <= b.even_upper and b.odd_lower <= b.odd_upper
        with pytest.raises(exact.OutOfRegimeError):
            exact.thm_bounds(ell, pmax * 1.01)


def test_sandwich_brackets_exact_probability_at_small_p():
    P4 = oracle.span_polynomial(4)
    for p in (1e-4, 1e-5):
        b = exact.thm_bounds(2, p, delta=0.01)
        assert b.even_lower <= exact.q_exact(2, p) <= P4.evaluate(p) <= b.even_upper


def test_expected_droplets():
    assert exact.subcube_count(2, 6, 4) == 60
    for p in (0.0, 0.02, 0.1):
        assert exact.expected_droplets(2, 6, 2, p) == pytest.approx(60 * float(exact.q_exact(2, p)))
    assert exact.expected_droplets(3, 4, 1, 0.1) == pytest.approx(math.comb(4, 2) * 4 * 9 * float(exact.q_exact(1, 0.1)))
    with pytest.raises(ValueError):
        exact.expected_droplets(2, 3, 2, 0.1)


# --- critical probability formulas --------------------------------------------


def test_pc_predict_n2_reduction():
    with HP:
        _reduction_checks()


def _reduction_checks():
    for d in (4, 17, 100, 999):
        assert mpmath.almosteq(exact.pc_predict(2, d, "grid-lower"), exact.pc_predict(2, d, "hypercube-lower"), rel_eps=1e-30)
        sharp = exact.pc_predict(2, d, "sharp")
        assert mpmath.almosteq(sharp, 16 * LAM.lam / d**2 * mpmath.mpf(2) ** (-2 * mpmath.sqrt(d)), rel_eps=1e-30)


def test_pc_predict_sharp_at_100():
    with HP:
        want = 16 * LAM.lam / 10**4 * mpmath.mpf(2) ** -20
        assert mpmath.almosteq(exact.pc_predict(2, 100, "sharp"), want, rel_eps=1e-30)
    assert float(want) == pytest.approx(1.77882e-9, rel=1e-5)


def test_pc_order_threshold():
    d0 = exact.pc_order_threshold(1000)
    for d in range(d0, 1001, 37):
        assert exact.pc_predict(2, d, "hypercube-lower") < exact.pc_predict(2, d, "hypercube-upper")
    with pytest.raises(ValueError):
        exact.pc_predict(2, 1, "sharp")


# --- f/g/h recursion ----------------------------------------------------------


def test_tech_lemma_h_one():
    run, v = exact.tech_lemma_eval(50, [0.0] * 50, [1.0] * 50)
    with HP:
        assert run.f_values[0] == 1 and run.f_values[1] == LAM.lam / 2
        assert 1 - LAM.lam / 2 <= run.f_values[50] <= LAM.lam / 2
        # with h = 1 the recursion is the one for g(l)
        assert mpmath.almosteq(run.f_values[50], exact.g_normalized(50), rel_eps=1e-25)
    assert v.ok


def test_tech_lemma_base_case():
    run, v = exact.tech_lemma_eval(1, [0.0], [1.0])
    with HP:
        assert run.f_values[1] == LAM.lam / 2 and v.ok


def test_tech_lemma_small_g():
    with mpmath.workprec(LAM.precision_bits):
        g = [mpmath.mpf(0)] + [mpmath.mpf("0.01") / m**2 for m in range(1, 100)]
        h = [1 + x for x in g]
    run, v = exact.tech_lemma_eval(100, g, h)
    assert v.ok


def test_tech_lemma_rejects_inadmissible_h():
    with pytest.raises(ValueError):
        exact.tech_lemma_eval(5, [0.0] * 5, [1.0, 1.5, 1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        exact.tech_lemma_eval(5, [0.1] * 5, [1.0] * 5)


def test_tech_lemma_recursion_is_satisfied():
    rng = random.Random(5)
    g = [0.0] + [rng.uniform(0, 0.01) for _ in range(19)]
    h = [1.0] + [1 + x / 2 for x in g[1:]]
    run, _ = exact.tech_lemma_eval(20, g, h)
    a = [0] + [exact.a_m(LAM, m) for m in range(1, 21)]
    for t in range(2, 21):
        want = mpmath.fsum((-1) ** (m + 1) * a[m] * h[t - m] * run.f_values[t - m] for m in range(1, t + 1))
        assert abs(run.f_values[t] / want - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 100), st.floats(0, 1 / 3), st.randoms(use_true_random=False))
def test_tech_lemma_random_admissible(ell, total, r):
    raw = [r.random() for _ in range(ell - 1)]
    scale = total / (sum(raw) or 1)
    with mpmath.workprec(LAM.precision_bits):
        g = [mpmath.mpf(0)] + [mpmath.mpf(x * scale) for x in raw]
        h = [mpmath.mpf(1)] + [1 + x * mpmath.mpf(r.random()) for x in g[1:]]
    _, v = exact.tech_lemma_eval(ell, g, h)
    assert v.ok
