import math

import numpy as np
import pytest

from ordexp.matrix_core import SIGMA_X, SIGMA_Z, identity, mat_exp, spectral_norm
from ordexp.operators import TermSet, build_system, constant_system, random_system
from ordexp.oracle import (
    StepSizeUnderflow,
    _eval_words,
    ordered_exp,
    piecewise_constant_exact,
    taylor_terms,
    taylor_words,
    truncation_bound_check,
)


def test_fig1b_closed_form():
    # H = cos(u) I, so U = exp(sin(mu + dt) - sin(mu)) I
    ts = build_system("fig1b")
    for mu, dt in [(0.0, 0.3), (0.4, 1.2), (1.0, -0.7)]:
        res = ordered_exp(ts, mu, dt)
        val = math.exp(math.sin(mu + dt) - math.sin(mu))
        np.testing.assert_allclose(res.U, val * identity(2), atol=1e-13)
        assert res.est_error <= 1e-13


def test_constant_system_matches_expm():
    a = np.array([[0.1, 1.0], [-0.4, 0.3]])
    res = ordered_exp(constant_system([a, SIGMA_X]), 0.0, 1.5)
    np.testing.assert_allclose(res.U, mat_exp((a + SIGMA_X) * 1.5), atol=1e-12)


def test_negative_dt_inverts():
    ts = random_system(2, dim=3)
    fwd = ordered_exp(ts, 0.1, 0.6).U
    back = ordered_exp(ts, 0.7, -0.6).U
    np.testing.assert_allclose(fwd @ back, identity(3), atol=1e-12)


def test_composition():
    ts = random_system(5, dim=3)
    whole = ordered_exp(ts, 0.0, 1.0).U
    split = ordered_exp(ts, 0.4, 0.6).U @ ordered_exp(ts, 0.0, 0.4).U
    np.testing.assert_allclose(whole, split, atol=1e-12)


def test_unitary_for_antihermitian():
    U = ordered_exp(build_system("random-antihermitian", seed=4), 0.0, 2.0).U
    np.testing.assert_allclose(U.conj().T @ U, identity(4), atol=1e-12)


def test_tolerance_floor():
    with pytest.raises(ValueError):
        ordered_exp(build_system("fig1b"), 0, 1, tol=1e-16)


def test_jump_without_breakpoint_underflows():
    ts = build_system("pauli-flip", interval=(0, 1))
    bare = TermSet(ts.terms)
    with pytest.raises(StepSizeUnderflow) as info:
        ordered_exp(bare, 0.0, 1.0)
    assert info.value.at == pytest.approx(0.5, abs=1e-6)


def test_jump_with_breakpoint():
    ts = build_system("pauli-flip", interval=(0, 1))
    np.testing.assert_allclose(ordered_exp(ts, 0.0, 1.0).U, identity(2), atol=1e-13)
    np.testing.assert_allclose(ordered_exp(TermSet(ts.terms), 0.0, 0.8, breakpoints=[0.5]).U,
                               mat_exp(SIGMA_Z * 0.2), atol=1e-13)


def test_piecewise_constant_order():
    segs = [(SIGMA_X, 0.3), (SIGMA_Z, 0.2)]
    np.testing.assert_allclose(piecewise_constant_exact(segs),
                               mat_exp(SIGMA_Z * 0.2) @ mat_exp(SIGMA_X * 0.3))
    with pytest.raises(ValueError):
        piecewise_constant_exact([])


def test_taylor_words():
    assert taylor_words(2) == {(0, 0): 1, (1,): 1}
    assert taylor_words(3) == {(0, 0, 0): 1, (1, 0): 2, (0, 1): 1, (2,): 1}
    # with multiplicity the word counts are Bell numbers
    assert [sum(taylor_words(p).values()) for p in range(7)] == [1, 1, 2, 5, 15, 52, 203]
    for p in range(1, 7):
        for w in taylor_words(p):
            assert sum(o + 1 for o in w) == p
        assert sum(taylor_words(p).values()) <= math.factorial(p)


def _residual(ts, mu, dt, terms):
    U = ordered_exp(ts, mu, dt).U
    return spectral_norm(U - sum(dt**p * t / math.factorial(p) for p, t in enumerate(terms)))


def test_t3_ordering():
    # T_{p+1} = T_p H + T_p' gives an O(dt^4) remainder; the mirrored ordering does not
    ts = random_system(9, dim=3, m=2)
    mu = 0.3
    derivs = [ts.derivative_at(mu, i) for i in range(3)]
    good = taylor_terms(ts, mu, 3)
    mirrored = good[:3] + [_eval_words({w[::-1]: c for w, c in taylor_words(3).items()}, derivs, 3)]
    r_good = [_residual(ts, mu, dt, good) for dt in (0.02, 0.01)]
    r_bad = [_residual(ts, mu, dt, mirrored) for dt in (0.02, 0.01)]
    assert math.log2(r_good[0] / r_good[1]) == pytest.approx(4, abs=0.2)
    assert math.log2(r_bad[0] / r_bad[1]) == pytest.approx(3, abs=0.2)


@pytest.mark.parametrize("P", [1, 2, 3])
def test_truncation_bound_random(P):
    lhs, rhs = truncation_bound_check(random_system(1, dim=3), 0.2, 0.15, P)
    assert lhs <= rhs


def test_truncation_needs_smoothness():
    ts = build_system("fig1a", interval=(0.0, 0.1))
    with pytest.raises(Exception):
        truncation_bound_check(ts, 0.0, 0.1, 2)
