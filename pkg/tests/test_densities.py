import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from formcount._guards import GuardExceeded
from formcount.forms import Box, Form, FormSystem, evaluate, partial_derivative, random_system
from formcount.densities import (
    STABILITY_TOL,
    AsymptoticReport,
    asymptotic_report,
    default_eps_ladder,
    find_smooth_padic_point,
    find_smooth_real_point,
    hensel_check,
    local_count,
    predict_main_term,
    primes_up_to,
    singular_integral,
    singular_series,
)

from oracles import brute_local_count, diagonal_quadratic_integral

x1x2 = FormSystem.of(Form.from_dict(2, 2, {(1, 1): 1}))
ternary = FormSystem.of(Form.diagonal([1, 1, -1], 2))
quad10 = FormSystem.of(Form.diagonal([1] * 5 + [-1] * 5, 2))


def brute(system, p, k):
    forms = [lambda x, f=f: evaluate(f.integer_multiple()[1], x) for f in system]
    return brute_local_count(forms, system.n, p**k)


def product_count(p, k):
    """Pairs mod p^k with v(x) + v(y) >= k, counted by valuation classes."""
    per = {a: p ** (k - a) - p ** (k - a - 1) for a in range(k)}
    per[k] = 1
    return sum(per[a] * per[b] for a in per for b in per if a + b >= k)


# -- local counts -----------------------------------------------------------------------


def test_local_count_examples():
    assert local_count(ternary, 3, 1).raw == 9
    assert local_count(x1x2, 3, 1).raw == 5
    assert local_count(x1x2, 3, 2).raw == 21
    lv = local_count(x1x2, 3, 2)
    assert lv.normalized == Fraction(21, 9) and lv.p == 3 and lv.k == 2


def test_trivial_modulus_two():
    F = FormSystem.of(Form.from_dict(3, 2, {(2, 0, 0): 2, (1, 1, 0): 4, (0, 1, 1): -2}))
    assert local_count(F, 2, 1).raw == 2**3


@pytest.mark.parametrize("p,k", [(2, 1), (2, 3), (3, 2), (5, 2), (7, 3)])
def test_product_form_valuation_oracle(p, k):
    assert local_count(x1x2, p, k).raw == product_count(p, k)


@pytest.mark.parametrize("seed", range(8))
def test_generic_count_matches_brute(seed):
    F = random_system(2 + seed % 2, 3, 1 + seed % 2, 4, seed)
    for p, k in [(2, 2), (3, 1), (5, 1)]:
        assert local_count(F, p, k).raw == brute(F, p, k)


@pytest.mark.parametrize("coeffs", [[1, 1, -1], [1, -2, 3, 5], [2, 4], [1, -1, 1, -1, 1]])
def test_diagonal_fast_path_matches_brute(coeffs):
    for d in (2, 3):
        F = FormSystem.of(Form.diagonal(coeffs, d))
        for p, k in [(2, 2), (3, 2), (5, 1)]:
            lv = local_count(F, p, k)
            assert lv.method == "diagonal"
            assert lv.raw == brute(F, p, k)


def test_rank_two_fast_path_matches_brute():
    F = FormSystem.of(Form.diagonal([1, 2, -1, 3], 2), Form.diagonal([1, -1, 1, 0], 2))
    for p, k in [(2, 2), (3, 1), (5, 1)]:
        lv = local_count(F, p, k)
        assert lv.method == "diagonal"
        assert lv.raw == brute(F, p, k)


def test_rational_forms_scaled():
    F = FormSystem.of(Form.from_dict(2, 2, {(2, 0): Fraction(1, 2), (0, 2): Fraction(-1, 2)}))
    assert local_count(F, 3, 1).raw == local_count(FormSystem.of(Form.diagonal([1, -1], 2)), 3, 1).raw


def test_local_count_errors():
    with pytest.raises(ValueError):
        local_count(x1x2, 3, 0)
    with pytest.raises(GuardExceeded):
        local_count(random_system(3, 6, 1, 3, 0), 31, 2)


def test_primes():
    assert primes_up_to(20) == [2, 3, 5, 7, 11, 13, 17, 19]
    assert primes_up_to(1) == []


# -- Hensel lifting ---------------------------------------------------------------------------


@pytest.mark.parametrize("n,p,seed", [(2, 3, 0), (2, 5, 1), (2, 7, 2), (3, 3, 3), (3, 5, 4),
                                      (3, 7, 5), (4, 3, 6), (4, 5, 7)])
def test_hensel_lifting_identity(n, p, seed):
    f = random_system(2 + seed % 2, n, 1, 6, seed)[0]
    rep = hensel_check(f, p)
    assert rep["expected_lifts"] == p ** (n - 1)
    assert rep["ok"], rep["failures"]


def test_hensel_examples():
    rep = hensel_check(Form.diagonal([1, 1, -1], 2), 5)
    assert rep["ok"] and rep["smooth_zeros"] == 24
    with pytest.raises(GuardExceeded):
        hensel_check(Form.diagonal([1] * 5, 2), 31)


# -- singular series ---------------------------------------------------------------------------


def test_series_product_form_not_stabilised():
    S = singular_series(x1x2, prime_bound=7, k_max=3)
    assert S.primes == [2, 3, 5, 7]
    for f in S.factors:
        assert not f.stabilized
        assert [lv.normalized for lv in f.levels] == [Fraction(product_count(f.p, k), f.p**k)
                                                      for k in (1, 2, 3)]
    assert not S.all_stabilized


def test_series_nonsingular_quadratic_stabilises():
    S = singular_series(quad10, prime_bound=13, k_max=3)
    two, odd = S.factors[0], S.factors[1:]
    # 2-adic lifting of a quadratic needs deeper levels: 1, 17/16, 273/256
    assert [lv.normalized for lv in two.levels] == [1, Fraction(17, 16), Fraction(273, 256)]
    assert not two.stabilized and not S.all_stabilized
    for f in odd:
        assert f.stabilized
        # odd p: levels 2 and 3 coincide; level 1 differs only through the singular origin
        a, b = f.levels[1].normalized, f.levels[2].normalized
        assert abs(a - b) / a <= STABILITY_TOL
        assert f.factor == f.levels[-1].normalized


def test_series_positive_definite_still_computable():
    S = singular_series(FormSystem.of(Form.diagonal([1, 1, 1, 1, 1], 2)), prime_bound=11)
    assert S.value > 0
    assert S.to_dict()["value"] == f"{S.value.numerator}/{S.value.denominator}"


def test_series_guard_on_first_level():
    with pytest.raises(GuardExceeded):
        singular_series(random_system(3, 6, 1, 3, 0), prime_bound=50, guard=10**6)


# -- singular integral -------------------------------------------------------------------------


def test_linear_shim_unit_density():
    I = singular_integral(FormSystem.of(Form.diagonal([1], 1)), Box.full(1), seed=3)
    assert abs(I.value - 1) <= 3 * I.stderr
    assert I.fit == "eps^2" and len(I.ladder) == 4


def test_positive_definite_shell_shrinks():
    # six squares: the shell volume is exactly proportional to eps^3, density to eps^2
    F = FormSystem.of(Form.diagonal([1] * 6, 2))
    I = singular_integral(F, Box.full(6), eps_ladder=(0.4, 0.3, 0.2, 0.1), seed=3)
    assert list(I.estimates) == sorted(I.estimates, reverse=True)
    assert abs(I.value) <= 3 * I.stderr
    exact = [math.pi**3 / 12 * e**2 for e in I.ladder]
    for est, se, ex in zip(I.estimates, I.stderrs, exact):
        assert abs(est - ex) <= 4 * se


def _grid_density(eps, h=1e-3):
    x = np.arange(-1 + h / 2, 1, h)
    X, Y = np.meshgrid(x, x)
    return np.count_nonzero(np.abs(X * X - Y * Y) < eps) * h * h / (2 * eps)


def test_difference_of_squares_against_grid_quadrature():
    F = FormSystem.of(Form.diagonal([1, -1], 2))
    ladder = (0.2, 0.1, 0.05)
    I = singular_integral(F, Box.full(2), eps_ladder=ladder, seed=11)
    for eps, est, se in zip(ladder, I.estimates, I.stderrs):
        assert abs(est - _grid_density(eps)) <= 4 * se + 1e-2


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("plus,minus", [(3, 2), (3, 3), (5, 5)])
def test_indefinite_quadratic_against_fresnel_oracle(plus, minus):
    F = FormSystem.of(Form.diagonal([1] * plus + [-1] * minus, 2))
    I = singular_integral(F, Box.full(plus + minus), seed=0)
    exact = diagonal_quadratic_integral(plus, minus)
    assert abs(I.value - exact) <= 4 * I.stderr


def test_integral_deterministic():
    F = random_system(2, 4, 1, 3, 2)
    a = singular_integral(F, Box.full(4), samples=20_000, seed=5)
    b = singular_integral(F, Box.full(4), samples=20_000, seed=5)
    c = singular_integral(F, Box.full(4), samples=20_000, seed=6)
    assert a == b
    assert a.estimates != c.estimates


def test_default_ladder():
    F = FormSystem.of(Form.diagonal([1, -1], 2))
    lad = default_eps_ladder(F, Box.full(2))
    assert len(lad) == 4
    assert [x / lad[0] for x in lad] == pytest.approx([1, 0.5, 0.25, 0.125])
    assert 0.19 < lad[0] < 0.2 + 1e-12


def test_integral_argument_checks():
    F = FormSystem.of(Form.diagonal([1, -1], 2))
    with pytest.raises(ValueError):
        singular_integral(F, Box.full(2), eps_ladder=(0.2, 0.1))
    with pytest.raises(ValueError):
        singular_integral(F, Box.full(2), eps_ladder=(0.1, 0.2, 0.05))
    with pytest.raises(ValueError):
        singular_integral(F, Box.full(2), samples=100)


# -- main term ------------------------------------------------------------------------------


def test_prediction_zero_factors():
    assert predict_main_term(quad10, Box.full(10), 20, 0, 3.5).value == 0
    assert predict_main_term(quad10, Box.full(10), 20, Fraction(3, 2), 0.0).value == 0


def test_prediction_constant_when_exponent_zero():
    F = FormSystem.of(Form.diagonal([1, -1], 2))
    a = predict_main_term(F, Box.full(2), 10, Fraction(2), 1.25)
    b = predict_main_term(F, Box.full(2), 1000, Fraction(2), 1.25)
    assert a.exponent == 0 and a.value == b.value == Fraction(5, 2)


@given(st.integers(1, 200), st.fractions(min_value=0, max_value=10), st.floats(0, 100))
def test_prediction_doubling(P, S, I):
    a = predict_main_term(quad10, Box.full(10), P, S, I)
    b = predict_main_term(quad10, Box.full(10), 2 * P, S, I)
    assert b.value == a.value * 2**8


# -- smooth points -----------------------------------------------------------------------------


def _grad(system, x):
    return np.array([[float(evaluate(partial_derivative(f, i), x)) for i in range(system.n)]
                     for f in system])


def test_smooth_real_point_examples():
    F = FormSystem.of(Form.diagonal([1, -1], 2))
    x = find_smooth_real_point(F, Box.full(2))
    assert x is not None
    assert abs(abs(x[0]) - abs(x[1])) < 1e-9 and abs(x[0]) > 0.5
    assert find_smooth_real_point(FormSystem.of(Form.diagonal([1, 1, 2], 2)), Box.full(3)) is None
    y = find_smooth_real_point(quad10, Box.full(10))
    assert y is not None and np.all(np.abs(y) <= 1)
    assert abs(sum(v * v for v in y[:5]) - sum(v * v for v in y[5:])) < 1e-9
    assert np.linalg.matrix_rank(_grad(quad10, [Fraction(v) for v in y])) == 1


def test_smooth_real_point_in_subbox():
    F = FormSystem.of(Form.diagonal([1, 1, -1], 2))
    box = Box(((0, Fraction(1, 2)), (0, Fraction(1, 2)), (0, 1)))
    x = find_smooth_real_point(F, box)
    assert x is not None
    assert all(float(a) - 1e-12 <= v <= float(b) + 1e-12 for v, (a, b) in zip(x, box.intervals))


def test_smooth_padic_point_examples():
    x = find_smooth_padic_point(ternary, 5)
    f = ternary[0]
    assert evaluate(f, x) % 5 == 0
    assert any(int(evaluate(partial_derivative(f, i), x)) % 5 for i in range(3))
    assert find_smooth_padic_point(FormSystem.of(Form.diagonal([1], 3)), 7) is None
    assert find_smooth_padic_point(quad10, 3) is not None


def test_padic_criterion_inconclusive_at_two_for_quadratics():
    # every partial derivative of a diagonal quadratic is even
    assert find_smooth_padic_point(quad10, 2) is None


# -- reports ----------------------------------------------------------------------------------


def test_report_without_real_points():
    F = FormSystem.of(Form.diagonal([1, 1, 1], 2))
    rep = asymptotic_report(F, Box.full(3), [2, 4], prime_bound=5, samples=10_000)
    assert [r.count for r in rep.rows] == [1, 1]
    assert not rep.real_positivity
    assert any("no smooth real point" in note for note in rep.notes)


def test_report_fields_and_csv():
    F = FormSystem.of(Form.diagonal([1, 1, -1, -1, 1], 2))
    rep = asymptotic_report(F, Box.full(5), [2, 4], prime_bound=7, samples=10_000,
                            sigma_star_verdict="VACUOUS_IN_U")
    assert isinstance(rep, AsymptoticReport)
    assert rep.real_positivity
    assert set(rep.padic_points) == {2, 3, 5, 7}
    assert any("VACUOUS_IN_U" in note for note in rep.notes)
    obj = rep.to_dict()
    assert obj["rows"][0]["P"] == 2 and "prediction" in obj["rows"][0]
    assert rep.to_csv().splitlines()[0] == "P,count,prediction,prediction_stderr,ratio,distance"
    assert rep.rows[1].prediction.value == rep.rows[0].prediction.value * 2**3
