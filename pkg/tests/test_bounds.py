import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdmax import bounds as bd
from hdmax.multipliers import SymbolPair
from hdmax.numerics import DomainError

mpmath.mp.dps = 40
SWEEP = [10, 30, 100, 300, 1000]


def test_default_grid_layout():
    for d in (3, 100):
        g = bd.default_grid(d)
        assert g[0] == pytest.approx(bd.R_MIN)
        assert g[-1] == bd.r_max(d) == 8 * d
        assert np.all(np.diff(g) > 0)
        assert np.sum((g > 0) & (g <= 4 * math.sqrt(d) + 1e-12)) >= bd.LINEAR_POINTS


def test_mu_near_one_not_violated_d100():
    reps = bd.check_mu_estimates(100)
    near = reps[0]
    assert near.inequality_id is bd.InequalityId.MU_NEAR_ONE
    assert near.declared_constant == pytest.approx(2 * math.pi ** 2)
    assert not near.violated_at_threshold
    assert near.r_grid.r_max == 800.0
    assert near.r_grid.r_min <= near.argmax_r <= near.r_grid.r_max
    assert all(r.worst_ratio >= 0 for r in reps)


def test_near_ratio_vanishes_at_origin_d3():
    r = np.array([1e-6, 1e-5, 1e-4])
    near = bd.check_mu_estimates(3, grid=r)[0]
    assert near.worst_ratio < 2 * math.pi ** 2 * 1e-3
    assert near.worst_ratio == pytest.approx(bd.check_mu_estimates(3, grid=r[-1:])[0].worst_ratio)


def test_derivative_constant_stable_50_vs_500():
    c50 = bd.check_mu_estimates(50)[2].fitted_constant
    c500 = bd.check_mu_estimates(500)[2].fitted_constant
    assert 0.5 <= c50 / c500 <= 2.0


def test_violation_flag_triggers_on_synthetic_tolerance():
    rep = bd._argmax_report(bd.InequalityId.MU_NEAR_ONE, 3, np.array([1.0, 2.0]), np.array([1.0, 25.0]),
                            declared=2 * math.pi ** 2)
    assert rep.violated_at_threshold and rep.argmax_r == 2.0


def test_argmax_ties_pick_smallest_r():
    rep = bd._argmax_report(bd.InequalityId.MU_FAR_DECAY, 3, np.array([1.0, 2.0, 3.0]), np.array([0.5, 1.0, 1.0]))
    assert rep.argmax_r == 2.0


def test_difference_near_ratio_vanishes_at_origin():
    rep = bd.check_difference_estimates(SymbolPair.MU_MINUS_G, 20, grid=np.array([1e-5, 1e-4]))[0]
    assert rep.worst_ratio < 1e-5


def test_mu_minus_m_constants_finite_d100():
    for rep in bd.check_difference_estimates("mu_minus_m", 100):
        assert math.isfinite(rep.fitted_constant) and rep.fitted_constant > 0
        assert rep.pair is SymbolPair.MU_MINUS_M


def test_far_field_triangle_inequality_d10():
    # the two symbols largely cancel, so only the upper direction holds
    far = bd.check_difference_estimates(SymbolPair.MU_MINUS_G, 10)[1].fitted_constant
    total = bd.far_field_constant("mu", 10) + bd.far_field_constant("g", 10)
    assert 0 < far <= total * (1 + 1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        bd.check_mu_estimates(2)
    with pytest.raises(DomainError):
        bd.check_difference_estimates("mu_minus_m", 2)


# --- Bessel decay ---------------------------------------------------------------

def test_bessel_half_order_closed_forms():
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x
    j, err = bd.bessel_from_symbol(0.5, math.pi)
    assert j == pytest.approx(0.0, abs=1e-12)
    j, err = bd.bessel_from_symbol(0.5, 2.0)
    assert abs(j) == pytest.approx(math.sqrt(2 / (2 * math.pi)) * abs(math.sin(2.0)), abs=1e-12)
    assert abs(j) == pytest.approx(0.5130, abs=1e-4)
    rep = bd.bessel_bound_check(0.5, [2.0, math.pi])
    assert rep.worst_ratio <= 1.0 and not rep.violated_at_threshold


def test_bessel_bound_order_five():
    grid = np.linspace(10.0, 200.0, 400)
    rep = bd.bessel_bound_check(5.0, grid)
    assert rep.worst_ratio <= 1.0
    assert rep.skipped < grid.size // 2
    assert rep.argmax_r < 30.0


def test_bessel_against_mpmath():
    for nu, x in [(5.0, 13.0), (20.5, 60.0), (2.0, 4.0), (0.5, 7.0)]:
        j, unc = bd.bessel_from_symbol(nu, x)
        assert abs(j - float(mpmath.besselj(nu, x))) <= unc
    _, unc = bd.bessel_from_symbol(5.0, 13.0)
    assert unc < 1e-12


def test_bessel_high_order_marks_unverifiable():
    # order 300 at its turning point: the prefactor is astronomically large, so the
    # quadrature error cannot certify the value and the points are skipped
    rep = bd.bessel_bound_check(300.0, [600.0, 700.0])
    assert rep.skipped == 2


def test_bessel_precondition():
    with pytest.raises(DomainError):
        bd.bessel_bound_check(5.0, [9.0])
    with pytest.raises(DomainError):
        bd.bessel_bound_check(0.25, [1.0])


# --- oscillatory core ----------------------------------------------------------------

def _core_oracle(r, d):
    nu = mpmath.mpf(d) / 2 - 1
    x = 2 * mpmath.pi * r
    norm = mpmath.gamma(mpmath.mpf(d) / 2) / (mpmath.gamma(mpmath.mpf(d - 1) / 2) * mpmath.sqrt(mpmath.pi))
    return mpmath.gamma(nu + 1) * (x / 2) ** (-nu) * mpmath.besselj(nu + 1, x) / norm


@pytest.mark.parametrize("r,d,route", [(0.3, 5, "quadrature"), (2.0, 50, "quadrature"),
                                       (288.75, 500, "bessel"), (499.0, 500, "bessel")])
def test_oscillatory_core_routes(r, d, route):
    lv, used = bd.log_abs_oscillatory_core(r, d)
    assert used == route
    ref = float(mpmath.log(abs(_core_oracle(r, d))))
    assert lv == pytest.approx(ref, abs=1e-8 * max(1.0, abs(ref)))


def test_oscillatory_core_report():
    rep = bd.check_oscillatory_core(10)
    assert rep.inequality_id is bd.InequalityId.OSC_CORE
    assert 0 < rep.fitted_constant < 10
    assert rep.r_grid.r_max == 10.0 and rep.skipped == 0


# --- sup-norms and fits -------------------------------------------------------------

def test_sup_norm_triangle_inequality():
    for d in (10, 100):
        gm = bd.sup_norm_difference(SymbolPair.G_MINUS_M, d)
        assert gm <= bd.sup_norm_difference("mu_minus_g", d) + bd.sup_norm_difference("mu_minus_m", d) + 2e-3


def test_sup_norm_mu_minus_m_decreases_from_10_to_100():
    s100 = bd.sup_norm_difference("mu_minus_m", 100)
    assert 0 < s100 < bd.sup_norm_difference("mu_minus_m", 10)


def test_sup_refinement_beats_grid():
    sup = bd.locate_sup("mu_minus_g", 30)
    t = bd.tabulate(30)
    a, _ = t.pair(SymbolPair.MU_MINUS_G)
    assert sup.value >= np.max(np.abs(a))
    assert sup.tail_bound < sup.value


def test_mu_minus_g_sup_strictly_decreasing():
    sups = [bd.sup_norm_difference("mu_minus_g", d) for d in SWEEP]
    assert all(b < a for a, b in zip(sups, sups[1:]))


def test_fit_decay_exact_power_law():
    dims = [10, 30, 100, 300, 1000]
    fit = bd.fit_decay(dims, [1.0 / d for d in dims])
    assert fit.slope == pytest.approx(-1.0, abs=1e-10)
    assert fit.residual == pytest.approx(0.0, abs=1e-10)
    assert fit.power_law_constant == pytest.approx(1.0)


def test_fit_decay_errors():
    with pytest.raises(DomainError):
        bd.fit_decay([10, 30, 100, 300], [1.0, 0.5, 0.0, 0.1])
    with pytest.raises(DomainError):
        bd.fit_decay([10, 30, 100], [1.0, 0.5, 0.1])
    with pytest.raises(DomainError):
        bd.fit_decay_exponent([3, 30, 100, 300], "mu_minus_m")


def test_decay_slopes():
    assert bd.fit_decay_exponent(SWEEP, "mu_minus_m").slope <= -0.75
    assert bd.fit_decay_exponent(SWEEP, "mu_minus_g").slope <= -0.25


# --- dyadic -----------------------------------------------------------------------

def test_dyadic_min_sum_at_one():
    assert bd.dyadic_min_sum(1.0) == pytest.approx(3.0, abs=1e-15)


def test_dyadic_min_sum_sqrt2_direct():
    t = math.sqrt(2.0)
    direct = sum(min(2.0 ** n * t, 1.0 / (2.0 ** n * t)) for n in range(-80, 81))
    assert bd.dyadic_min_sum(t) == pytest.approx(direct, abs=1e-14)
    assert direct <= 4.0


@given(st.floats(1e-6, 1e6))
@settings(max_examples=300, deadline=None)
def test_dyadic_min_sum_properties(t):
    s = bd.dyadic_min_sum(t)
    assert s <= 4.0
    assert bd.dyadic_min_sum(2.0 * t) == pytest.approx(s, abs=1e-12)


def test_dyadic_min_sum_domain():
    with pytest.raises(DomainError):
        bd.dyadic_min_sum(0.0)


def test_dyadic_bound_zero_symbol():
    assert bd.dyadic_bound(1.7, 0.0) == 0.0


def test_certificate_composition():
    cert = bd.dyadic_maximal_certificate("mu_minus_m", 30)
    assert cert.value == pytest.approx(2 * cert.K ** 0.75 * cert.sup_norm ** 0.25)
    assert cert.K == bd.hypothesis_constant("mu_minus_m", 30)
