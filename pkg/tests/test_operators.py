import math

import numpy as np
import pytest

from ordexp.matrix_core import SIGMA_Z, identity, matrix_to_json
from ordexp.operators import (
    FINITE_DIFFERENCE,
    OperatorTerm,
    SmoothnessError,
    TermSet,
    build_system,
    constant_system,
    estimate_lambda,
    evaluate_term,
    is_contractive,
    load_system_json,
    make_profile,
    random_system,
    scalar_term,
    u3sin_inv,
)


def test_lambda_of_sin2u():
    # sup|sin|=1, sup|2cos|^(1/2)=sqrt2, sup|4sin|^(1/3)=2^(2/3)
    ts = TermSet((scalar_term(make_profile("sin", omega=2.0), identity(1)),))
    est = estimate_lambda(ts, (0.0, math.pi), 2, safety_factor=1.0)
    assert est.per_order == pytest.approx((1.0, math.sqrt(2), 2 ** (2 / 3)), rel=1e-9)
    assert est.Lambda == pytest.approx(2 ** (2 / 3), rel=1e-9)
    assert estimate_lambda(ts, (0.0, math.pi), 2).Lambda == pytest.approx(1.05 * 2 ** (2 / 3), rel=1e-9)


def test_lambda_monotone_in_order_and_interval():
    ts = random_system(1, dim=3, m=2)
    by_order = [estimate_lambda(ts, (0, 1), P).Lambda for P in range(5)]
    assert all(a <= b for a, b in zip(by_order, by_order[1:]))
    by_width = [estimate_lambda(ts, (0, w), 2).Lambda for w in (0.25, 0.5, 1.0, 2.0)]
    assert all(a <= b + 1e-12 for a, b in zip(by_width, by_width[1:]))


def test_lambda_zero_system():
    ts = constant_system([np.zeros((2, 2))])
    assert estimate_lambda(ts, (0, 1), 3).Lambda == 0.0


def test_lambda_rejects_order_beyond_smoothness():
    ts = build_system("fig1a", interval=(-0.1, 0.1))
    with pytest.raises(SmoothnessError):
        estimate_lambda(ts, (-0.1, 0.1), 2)


def test_smoothness_depends_on_interval():
    near = build_system("fig1a", interval=(0.0, 0.3))
    away = build_system("fig1a", interval=(0.5, 0.8))
    assert near.max_derivative == 1
    assert away.max_derivative == math.inf
    with pytest.raises(SmoothnessError):
        evaluate_term(near.terms[0], 0.1, 2)
    flip = build_system("pauli-flip", interval=(0.0, 1.0))
    assert flip.max_derivative == 0
    assert build_system("pauli-flip", interval=(0.0, 0.4)).max_derivative == math.inf


def test_u3sin_values():
    u = 0.3
    assert u3sin_inv(u, 0) == pytest.approx(u**3 * math.sin(1 / u))
    d1 = 3 * u**2 * math.sin(1 / u) - u * math.cos(1 / u)
    assert u3sin_inv(u, 1) == pytest.approx(d1)
    assert u3sin_inv(0.0, 0) == 0.0
    assert u3sin_inv(0.0, 1) == 0.0
    with pytest.raises(SmoothnessError):
        u3sin_inv(0.0, 2)


@pytest.mark.parametrize("u", [0.2, 0.45, 1.3])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_finite_difference_matches_analytic(u, p):
    ts = random_system(4, dim=3, m=2)
    for term in ts.terms:
        fd = OperatorTerm(term.dim, lambda x, q, t=term: t.eval(x, 0), math.inf, FINITE_DIFFERENCE)
        exact = evaluate_term(term, u, p)
        approx = evaluate_term(fd, u, p)
        assert np.max(np.abs(approx - exact)) <= 1e-6 * max(1.0, np.max(np.abs(exact)))


def test_u3sin_derivatives_match_finite_difference():
    prof = make_profile("u3sin1u")
    fd = OperatorTerm(1, lambda x, q: np.array([[prof.deriv(x, 0)]]), math.inf, FINITE_DIFFERENCE)
    for p in (1, 2, 3):
        u = 0.7
        assert evaluate_term(fd, u, p)[0, 0].real == pytest.approx(prof.deriv(u, p), rel=1e-6)


def test_termset_dimension_mismatch():
    with pytest.raises(ValueError):
        TermSet(constant_system([np.eye(2)]).terms + constant_system([np.eye(3)]).terms)


def test_termset_sum_and_derivative():
    ts = random_system(2, dim=3, m=3)
    u = 0.4
    np.testing.assert_allclose(ts.sum_at(u), sum(evaluate_term(t, u) for t in ts.terms))
    np.testing.assert_allclose(ts.derivative_at(u, 2), sum(evaluate_term(t, u, 2) for t in ts.terms))


def test_contractivity():
    assert is_contractive(build_system("random-antihermitian", seed=3), (0, 1))
    assert not is_contractive(build_system("random-hermitian", seed=3), (0, 1))
    assert not is_contractive(build_system("pauli-flip"), (0, 1))


def test_random_system_is_reproducible():
    a = random_system(7, dim=4, m=2)
    b = random_system(7, dim=4, m=2)
    for u in (0.0, 0.9):
        np.testing.assert_array_equal(a.sum_at(u), b.sum_at(u))


def test_load_system_json():
    obj = {
        "dim": 2,
        "terms": [
            {"profile": "cos", "params": {"omega": 2.0}, "matrix": matrix_to_json(SIGMA_Z)},
            {"profile": "sign-flip", "params": {"at": 0.25}, "matrix": matrix_to_json(identity(2))},
        ],
    }
    ts = load_system_json(obj, (0.0, 1.0))
    assert ts.m == 2 and ts.dim == 2
    assert ts.breakpoints == (0.25,)
    np.testing.assert_allclose(ts.terms[0].eval(0.5, 0), math.cos(1.0) * SIGMA_Z)
    bad = dict(obj, dim=3)
    with pytest.raises(ValueError):
        load_system_json(bad)


def test_unknown_system():
    with pytest.raises(KeyError):
        build_system("nope")


def test_lambda_of_sin2u_all_orders():
    ts = TermSet((scalar_term(make_profile("sin", omega=2.0), identity(1)),))
    est = estimate_lambda(ts, (0.0, math.pi), 20, safety_factor=1.0)
    assert est.Lambda <= 2.0
