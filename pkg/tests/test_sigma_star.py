import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from formcount.forms import Form, FormSystem, beta_dot, derivative_tensor, random_system
from formcount.multilinear import eval_m, jacobian, rank_mod_p
from formcount.sigma_star import (
    CERTIFIED_NOT_IN_U,
    DEFAULT_C1,
    HEURISTIC_IN_U,
    VACUOUS_IN_U,
    Witness,
    calibrate_c1,
    constraint_set_empty,
    default_primes,
    dichotomy_check,
    sigma_star_fp_scan,
    sigma_star_lower_bound,
    u_membership,
    verify_dichotomy_check,
    witness_rank,
)
from formcount._guards import GuardExceeded


def diagonal_cubic(n):
    return FormSystem.of(Form.diagonal([1] * n, 3))


fermat3 = diagonal_cubic(3)
e1, e2, e3 = (1, 0, 0), (0, 1, 0), (0, 0, 1)


# -- witness_rank ----------------------------------------------------------------------


def test_witness_rank_examples():
    assert witness_rank(fermat3, (1,), [e1, e2]) == 2
    assert witness_rank(fermat3, (1,), [e1, e1]) is None
    q = FormSystem.of(Form.diagonal([1, 1], 2))
    for x in [(1, 0), (0, 1), (1, 1), (3, -7)]:
        assert witness_rank(q, (1,), [x]) is None


def test_witness_rank_rejects_zeros():
    with pytest.raises(ValueError):
        witness_rank(fermat3, (0,), [e1, e2])
    with pytest.raises(ValueError):
        witness_rank(fermat3, (1,), [(0, 0, 0), e2])


@given(st.integers(1, 5), st.integers(-4, 4).filter(bool), st.integers(-4, 4).filter(bool),
       st.integers(0, 200))
def test_witness_rank_scale_invariance(t, t1, t2, seed):
    system = random_system(3, 3, 2, 3, seed)
    report = sigma_star_lower_bound(system, budget=60, seed=seed)
    w = report.witness
    if w is None:
        return
    beta = tuple(Fraction(t, 3) * b for b in w.beta)
    tup = [tuple(t1 * x for x in w.point[0]), tuple(t2 * x for x in w.point[1])]
    assert witness_rank(system, beta, tup) == w.rank


# -- emptiness and lower bounds -----------------------------------------------------------


def test_constraint_set_empty_cases():
    assert constraint_set_empty(FormSystem.of(Form.diagonal([1, 1], 2)))
    assert not constraint_set_empty(FormSystem.of(Form.from_dict(2, 2, {(2, 0): 1})))
    assert not constraint_set_empty(fermat3)
    assert constraint_set_empty(FormSystem.of(Form.diagonal([2], 3)))
    two = FormSystem.of(Form.diagonal([1, 1], 2), Form.diagonal([1, -1], 2))
    assert not constraint_set_empty(two)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_diagonal_cubic_lower_bound(n):
    report = sigma_star_lower_bound(diagonal_cubic(n), budget=200)
    assert report.lower_bound == n - 2
    assert report.witness.rank == 2
    assert report.witness.verify(diagonal_cubic(n))


def test_nonsingular_quadratic_is_vacuous():
    report = sigma_star_lower_bound(FormSystem.of(Form.diagonal([1, 2, -3], 2)), budget=100)
    assert report.lower_bound is None
    assert report.verdict == VACUOUS_IN_U
    assert report.to_dict()["lower_bound"] == "VACUOUS"


def test_random_dense_system_heuristic():
    report = u_membership(random_system(3, 4, 1, 10, 1))
    assert report.verdict == HEURISTIC_IN_U
    assert report.witness is None or report.witness.rank > 3


def test_lower_bound_monotone_in_budget():
    system = random_system(3, 3, 2, 2, 4)
    bounds = [sigma_star_lower_bound(system, budget=b, seed=1).lower_bound for b in (5, 20, 80, 300)]
    assert bounds == sorted(bounds)


def test_search_independent_of_worker_count():
    system = random_system(3, 3, 2, 2, 4)
    a = sigma_star_lower_bound(system, budget=120, seed=2, workers=1)
    b = sigma_star_lower_bound(system, budget=120, seed=2, workers=3)
    assert a.to_dict() == b.to_dict()


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        sigma_star_lower_bound(fermat3, budget=0)


# -- F_p scans ------------------------------------------------------------------------------


def test_fp_scan_examples():
    scan = sigma_star_fp_scan(diagonal_cubic(2), 5)
    assert (scan.min_rank, scan.sigma) == (2, 0)
    scan = sigma_star_fp_scan(fermat3, 3)
    assert scan.sigma >= 1
    scan = sigma_star_fp_scan(FormSystem.of(Form.diagonal([1, 1], 2)), 5)
    assert scan.empty and scan.sigma is None


def test_fp_scan_guard():
    with pytest.raises(GuardExceeded):
        sigma_star_fp_scan(diagonal_cubic(6), 7)


@pytest.mark.parametrize("p", [5, 7, 11])
def test_witness_reduces_mod_p(p):
    """A rational witness reduces to an F_p point of no larger rank."""
    for n in (3, 4):
        system = diagonal_cubic(n)
        w = sigma_star_lower_bound(system, budget=100).witness
        g = beta_dot(system, w.beta)
        T = derivative_tensor(g)
        assert all(x % p == 0 for x in eval_m(T, w.point))
        assert rank_mod_p(jacobian(T, w.point).entries, p) <= w.rank
        scan = sigma_star_fp_scan(system, p, guard=None) if p ** (1 + 2 * n) <= 10**8 else None
        if scan is not None:
            assert scan.min_rank <= w.rank


# -- membership ------------------------------------------------------------------------------


def test_u_membership_examples():
    report = u_membership(diagonal_cubic(4))
    assert report.verdict == CERTIFIED_NOT_IN_U
    assert report.witness.rank <= 4 - 1
    assert report.witness.verify(diagonal_cubic(4))
    assert u_membership(FormSystem.of(Form.diagonal([1, 1], 2))).verdict == VACUOUS_IN_U


def test_bad_reduction_blocks_vacuous_verdict():
    # nonsingular over Q, but x3 drops out mod 3 and the F_3 scan finds points
    system = FormSystem.of(Form.diagonal([1, 2, -3, 1], 2))
    report = u_membership(system)
    assert report.constraint_empty
    assert any(scan.p == 3 and not scan.empty for scan in report.fp_scans)
    assert report.verdict == HEURISTIC_IN_U
    assert u_membership(system, primes=(5, 7)).verdict == VACUOUS_IN_U


def test_default_primes_skip_p_at_most_d():
    assert default_primes(2) == (3, 5, 7)
    assert default_primes(3) == (5, 7, 11)
    assert default_primes(5, 2) == (7, 11)


def test_cube_in_one_variable_is_vacuous():
    # 6xy = 0 has points mod 3 only because 3 divides 3!
    system = FormSystem.of(Form.diagonal([1], 3))
    assert u_membership(system).verdict == VACUOUS_IN_U
    forced = u_membership(system, primes=(3,))
    assert forced.verdict == HEURISTIC_IN_U
    assert any("p <= d" in note for note in forced.notes)


def test_u_membership_requires_n_at_least_R():
    system = FormSystem.of(Form.diagonal([1], 3), Form.diagonal([2], 3))
    with pytest.raises(ValueError):
        u_membership(system)


def test_certified_report_is_replayable_from_json():
    report = u_membership(diagonal_cubic(3))
    obj = json.loads(json.dumps(report.to_dict()))
    w = obj["witness"]
    beta = [Fraction(b) for b in w["beta"]]
    tup = [[Fraction(x) for x in v] for v in w["vectors"]]
    assert witness_rank(diagonal_cubic(3), beta, tup) == w["rank"] == 2
    assert Witness(tuple(beta), report.witness.point, 2).verify(diagonal_cubic(3))


# -- the Jacobian dichotomy at a point ------------------------------------------------------------


def test_dichotomy_check_at_fermat_witness():
    check = dichotomy_check(fermat3, (1,), [e1, e2], s=1)
    assert check.alternative == 2
    assert check.subspaces == [[1], [0]]
    assert sum(len(u) for u in check.subspaces) == 3 - 1
    assert check.verified
    assert verify_dichotomy_check(fermat3, (1,), [e1, e2], check, samples=500, seed=9)


def test_dichotomy_check_default_s_uses_lower_bound():
    check = dichotomy_check(fermat3, (1,), [e1, e2])
    assert check.s == 1
    assert any("lower bound" in note for note in check.notes)


def test_dichotomy_check_far_point_alternative_one():
    f = random_system(3, 4, 1, 5, 2)
    c1 = calibrate_c1(f, samples=2000, seed=1)
    assert c1 > 0
    check = dichotomy_check(f, (1,), [(1, 2, -1, 3), (2, -1, 1, 1)], c1=Fraction(c1).limit_denominator(10**6) / 2, s=0)
    assert check.alternative == 1
    assert check.verified


def test_dichotomy_check_witness_never_alternative_one():
    check = dichotomy_check(fermat3, (1,), [e1, e2], c1=Fraction(1, 10**9), s=1)
    assert check.m_norm == 0
    assert check.alternative in (2, "FAIL")


def test_dichotomy_check_argument_checks():
    with pytest.raises(ValueError):
        dichotomy_check(fermat3, (0,), [e1, e2])
    with pytest.raises(ValueError):
        dichotomy_check(fermat3, (1,), [e1, (0, 0, 0)])
    with pytest.raises(ValueError):
        dichotomy_check(fermat3, (1,), [e1, e2], c1=0)


def test_default_constants():
    assert DEFAULT_C1 == Fraction(1, 100)
