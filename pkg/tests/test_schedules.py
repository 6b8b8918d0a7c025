import math
import threading

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifbkit.problems import gen_qp_instance, make_lasso
from ifbkit.schedules import (ComparisonSeq, ConstantBeta, Exp, FistaCD, FistaClassic,
                              LogPoly, NoInertia, Power, beta_star, check_assumption_a2,
                              check_nesterov_rule, comparison_alpha, comparison_for,
                              default_comparisons, default_schedules, dominance_onset,
                              gamma, growth_ratio, parse_schedule, t_value)
from ifbkit.schedules import _int_log_over_pow, _int_log_over_sq

mpmath.mp.dps = 50

T_BASED = [Exp(0.5), Exp(0.2), Power(8, 4), Power(0.5, 0.5), Power(2, 1), LogPoly(1.0),
           LogPoly(0.5), FistaClassic(), FistaCD(4), FistaCD(0.5)]


def mp_t(s, k):
    """``t_k`` in 50-digit arithmetic straight from the defining formulas."""
    k = mpmath.mpf(k)
    if isinstance(s, Exp):
        return mpmath.e ** ((k - 1) ** mpmath.mpf(s.alpha))
    if isinstance(s, Power):
        a = mpmath.mpf(s.a)
        return (k ** mpmath.mpf(s.r) - 1 + a) / a
    if isinstance(s, LogPoly):
        return mpmath.mpf(1) if k == 1 else k / mpmath.log(k) ** mpmath.mpf(s.theta)
    if isinstance(s, FistaCD):
        a = mpmath.mpf(s.a)
        return (k - 1 + a) / a
    raise TypeError(s)


def mp_gamma(s, k):
    return (mp_t(s, k) - 1) / mp_t(s, k + 1)


def mp_fista_t(n):
    t = [None, mpmath.mpf(1)]
    for _ in range(n):
        t.append((1 + mpmath.sqrt(1 + 4 * t[-1] ** 2)) / 2)
    return t


# -- values and weights ------------------------------------------------------

@pytest.mark.parametrize("s", T_BASED, ids=str)
def test_t_starts_at_one_and_gamma_at_zero(s):
    assert t_value(s, 1) == 1.0
    assert gamma(s, 1) == 0.0


def test_fista_second_value():
    assert t_value(FistaClassic(), 2) == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-15)
    assert t_value(FistaClassic(), 2) == pytest.approx(1.6180339887, abs=1e-10)


def test_fista_cd_values():
    assert t_value(FistaCD(4), 5) == 2.0
    assert gamma(FistaCD(4), 5) == pytest.approx(4 / 9, rel=1e-15)
    ks = np.arange(1, 200)
    np.testing.assert_array_equal(FistaCD(3).gamma(ks), (ks - 1.0) / (ks + 3.0))


def test_fista_half_k_limit():
    assert t_value(FistaClassic(), 10**4) / 10**4 == pytest.approx(0.5, rel=0.01)


def test_fista_recursion_equality():
    s = FistaClassic()
    ks = np.arange(1, 10**4)
    t, t1 = s.t(ks), s.t(ks + 1)
    assert np.max(np.abs(t**2 - (t1**2 - t1)) / t1**2) <= 1e-12


def test_fista_table_matches_high_precision():
    ref = mp_fista_t(2000)
    for k in (2, 3, 10, 500, 2000):
        assert t_value(FistaClassic(), k) == pytest.approx(float(ref[k]), rel=1e-13)
        g = (ref[k] - 1) / ref[k + 1]
        assert gamma(FistaClassic(), k) == pytest.approx(float(g), rel=1e-13)


def test_exp_gamma_at_one_million_matches_high_precision():
    s = Exp(0.5)
    k = 10**6
    assert gamma(s, k) == pytest.approx(float(mp_gamma(s, k)), rel=1e-12)


@pytest.mark.parametrize("s", [x for x in T_BASED if not isinstance(x, FistaClassic)], ids=str)
@pytest.mark.parametrize("k", [2, 3, 7, 100, 12345, 10**6])
def test_gamma_matches_high_precision(s, k):
    assert gamma(s, k) == pytest.approx(float(mp_gamma(s, k)), rel=1e-12, abs=1e-15)


def test_exp_t_refuses_to_overflow():
    with pytest.raises(OverflowError):
        t_value(Exp(0.5), 10**6)
    assert 0.99 < gamma(Exp(0.5), 10**6) < 1


@pytest.mark.parametrize("s", T_BASED + [ConstantBeta(0.3), NoInertia()], ids=str)
def test_gamma_in_unit_interval_and_vectorised_consistent(s):
    ks = np.concatenate([np.arange(1, 3000), np.array([10**5, 10**6, 10**7])])
    g = s.gamma(ks)
    assert np.all(g >= 0) and np.all(g < 1)
    # scalar and vector evaluation are bitwise identical
    for k in (1, 2, 17, 2999, 10**6):
        i = int(np.flatnonzero(ks == k)[0])
        assert float(s.gamma(k)) == float(g[i])


def test_gamma_tends_to_one_for_all_cases():
    for s in default_schedules().values():
        assert gamma(s, 10**6) > 0.99


def test_fista_gamma_expansion():
    # gamma_k = 1 - 3/k + O(ln k / k^2): the scaled residual stays bounded
    # and drifts down towards its limit 3/2 as the C/k^2 term fades
    s = FistaClassic()
    ratios = []
    for k in (10**3, 10**4, 10**5, 10**6):
        ratios.append((gamma(s, k) - (1 - 3 / k)) * k**2 / math.log(k))
    assert all(1.0 < r < 3.0 for r in ratios)
    assert ratios == sorted(ratios, reverse=True)


def test_power_small_r_expansion():
    s = Power(0.5, 0.5)
    k = 10**6
    assert k**0.5 * (1 - gamma(s, k)) == pytest.approx(0.5, rel=0.01)


def test_constant_and_no_inertia():
    np.testing.assert_array_equal(ConstantBeta(0.4).gamma(np.arange(1, 5)), [0.4] * 4)
    assert gamma(NoInertia(), 7) == 0.0
    with pytest.raises(TypeError):
        t_value(NoInertia(), 3)
    with pytest.raises(ValueError):
        ConstantBeta(1.0)


def test_parameter_validation():
    for bad in (lambda: Exp(1.0), lambda: Exp(0.0), lambda: Power(0, 1), lambda: Power(1, 0),
                lambda: FistaCD(0), lambda: LogPoly(0), lambda: LogPoly(60)):
        with pytest.raises(ValueError):
            bad()
    with pytest.raises(ValueError):
        gamma(FistaCD(4), 0)


def test_logpoly_initial_stretch():
    # t_k falls while ln k < theta; large theta pushes gamma_2 past one
    s = LogPoly(1.0)
    g = s.gamma(np.arange(1, 40))
    assert np.all((g >= 0) & (g < 1))
    assert t_value(s, 2) == pytest.approx(2 / math.log(2))
    with pytest.raises(ValueError, match="outside"):
        LogPoly(2.0)


def test_fista_table_thread_safe():
    out = {}

    def work(i):
        out[i] = FistaClassic().gamma(np.arange(1, 50001 + 1000 * i))[:50000].copy()

    threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    for i in range(1, 8):
        assert out[i].tobytes() == out[0].tobytes()


# -- Nesterov rule and growth assumption --------------------------------------

def test_nesterov_rule():
    assert check_nesterov_rule(FistaClassic(), 10**5) is None
    assert check_nesterov_rule(FistaCD(4), 10**5) is None
    k = check_nesterov_rule(Power(8, 4), 10**5)
    assert k is not None and k >= 1
    with pytest.raises(ValueError):
        check_nesterov_rule(FistaClassic(), 1)


def test_nesterov_rule_matches_high_precision_scan():
    s = Power(2, 1)
    first = next(k for k in range(1, 200)
                 if mp_t(s, k) ** 2 - mp_t(s, k + 1) ** 2 + mp_t(s, k + 1) < 0)
    assert check_nesterov_rule(s, 200) == first


@pytest.mark.parametrize("s,sigma,c", [
    (Exp(0.5), 0.5, 0.5), (Exp(0.3), 0.7, 0.3), (Power(8, 4), 1.0, 8.0),
    (Power(0.5, 0.5), 1.0, 0.5), (LogPoly(1.0), 1.0, 1.0), (FistaClassic(), 1.0, 1.0),
    (FistaCD(4), 1.0, 1.0),
], ids=str)
def test_assumption_a2_limits(s, sigma, c):
    est = check_assumption_a2(s, sigma, 10**6)
    assert est.converged
    assert est.limit == pytest.approx(c, rel=0.01)


def test_assumption_a2_wrong_sigma_not_converged():
    est = check_assumption_a2(Exp(0.5), 1.0, 10**6)
    assert not est.converged or est.limit > 10


def test_growth_ratio_high_precision():
    s = Exp(0.5)
    k = 10**5
    ref = mpmath.mpf(k) ** 0.5 * (mp_t(s, k + 1) / mp_t(s, k) - 1)
    assert growth_ratio(s, k, 0.5) == pytest.approx(float(ref), rel=1e-10)


# -- comparison sequences ----------------------------------------------------

def test_case6_unit_a_matches_gamma_exactly():
    c = ComparisonSeq(6, FistaCD(1))
    ks = np.arange(1, 10**4 + 1)
    np.testing.assert_allclose(c.alpha(ks), FistaCD(1).gamma(ks), rtol=0, atol=1e-12)
    np.testing.assert_allclose(c.alpha(ks), (ks**2 - 1.0) / (ks + 1.0) ** 2, rtol=0, atol=1e-12)


def test_antiderivatives():
    for K in (2.0, 10.0, 1e3):
        ref = mpmath.quad(lambda x: mpmath.log(x) / x**2, [1, K])
        assert _int_log_over_sq(K) == pytest.approx(float(ref), rel=1e-12)
        for a in (0.3, 0.5, 0.9):
            ref = mpmath.quad(lambda x: mpmath.log(x) / x ** (1 + a), [1, K])
            assert _int_log_over_pow(K, a) == pytest.approx(float(ref), rel=1e-12)
    assert _int_log_over_sq(1e300) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("case", range(1, 7))
def test_default_comparisons_dominate_from_finite_onset(case):
    c = default_comparisons()[case]
    onset = dominance_onset(c, 10**5)
    assert onset <= 100
    ks = np.arange(onset, 10**5 + 1)
    assert np.all(comparison_alpha(c, ks) >= c.schedule.gamma(ks) - 1e-14)


@pytest.mark.parametrize("case,sched", [(3, Power(0.5, 0.5)), (4, LogPoly(1.0))])
@pytest.mark.parametrize("p", [2.0, 3.0])
def test_free_exponent_variants_dominate(case, sched, p):
    assert dominance_onset(ComparisonSeq(case, sched, p), 10**5) <= 10**3


def test_case6_small_a_dominates_only_late():
    c = ComparisonSeq(6, FistaCD(0.5))
    assert dominance_onset(c, 10**5) > 10**5
    for k in (10**7, 10**8, 10**9):
        assert comparison_alpha(c, k) >= gamma(FistaCD(0.5), k)


@pytest.mark.parametrize("case", range(1, 7))
def test_comparison_sequences_diverge(case):
    c = default_comparisons()[case]
    s = c.log_s(np.array([10, 10**3, 10**5]))
    assert s[2] > s[1] > s[0]
    assert np.all(c.s(np.arange(1, 1000)) >= 0)


@pytest.mark.parametrize("case", range(1, 7))
def test_comparison_growth_vanishes(case):
    c = default_comparisons()[case]
    # case 1 decays like 2 alpha k^(alpha - 1), so it needs a later probe
    k = 10**7 if case == 1 else 10**5
    assert 0 < c.growth(k) < 1e-3


def test_comparison_alpha_high_precision():
    c = ComparisonSeq(5, FistaClassic())

    def s(k):
        K = mpmath.mpf(k - 1)
        return (K**3) / (1 - (1 + mpmath.log(K)) / K) ** 2

    for k in (5, 50, 5000):
        assert comparison_alpha(c, k) == pytest.approx(float((s(k) - 1) / s(k + 1)), rel=1e-11)


def test_comparison_rejects_mismatched_schedule():
    with pytest.raises(ValueError):
        ComparisonSeq(5, FistaCD(4))
    with pytest.raises(ValueError):
        ComparisonSeq(2, Power(0.5, 1))
    with pytest.raises(ValueError):
        ComparisonSeq(3, Power(0.5, 1), p=1.0)
    with pytest.raises(ValueError):
        comparison_for(NoInertia())


# -- grammar -----------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("exp:0.5", Exp(0.5)), ("pow:8:4", Power(8, 4)), ("logpoly:1", LogPoly(1.0)),
    ("fista", FistaClassic()), ("fista_cd:4", FistaCD(4)), ("const:0.3", ConstantBeta(0.3)),
    ("none", NoInertia()),
])
def test_parse_schedule(text, expected):
    s = parse_schedule(text)
    assert s == expected
    assert s.spec == text


@pytest.mark.parametrize("text", ["", "pow:1", "exp", "fista:2", "wobble:1", "exp:x", "const:1.5"])
def test_parse_schedule_rejects(text):
    with pytest.raises(ValueError):
        parse_schedule(text)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["exp", "pow", "fista_cd", "const"]),
       st.floats(0.01, 0.99), st.floats(0.01, 20))
def test_parse_schedule_round_trip(kind, u, v):
    s = {"exp": lambda: Exp(u), "pow": lambda: Power(v, u), "fista_cd": lambda: FistaCD(v),
         "const": lambda: ConstantBeta(u)}[kind]()
    assert parse_schedule(s.spec) == s


def test_beta_star():
    p = gen_qp_instance(20, seed=1)
    s = beta_star(p)
    L, m = p.lipschitz, p.strong_convexity
    assert s.beta == pytest.approx((math.sqrt(L) - math.sqrt(m)) / (math.sqrt(L) + math.sqrt(m)))
    assert 0 < s.beta < 1 and s.label == "beta_star"
    with pytest.raises(ValueError):
        beta_star(make_lasso(np.ones((3, 2)), np.ones(3), 1.0))
