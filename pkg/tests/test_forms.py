import pytest

from gmpy2 import mpq

from x0iso.forms import (bernoulli, delta, e2N, eisenstein,
                         invariant_quadruple, sigma)
from x0iso.series import QSeries, eq_on_common_window

SPORADIC_SMALL = (11, 14, 15, 17, 19, 21, 27, 37, 43, 67)


def test_bernoulli():
    assert bernoulli(2) == mpq(1, 6)
    assert bernoulli(4) == mpq(-1, 30)
    assert bernoulli(6) == mpq(1, 42)
    assert bernoulli(12) == mpq(-691, 2730)


def test_sigma():
    assert sigma(1, 6) == 12
    assert sigma(3, 2) == 9
    assert sigma(5, 1) == 1
    assert sigma(1, 12) == 28


def test_eisenstein_leading_terms():
    e4 = eisenstein(4, 3)
    assert [e4.coefficient(i) for i in range(3)] == [1, 240, 2160]
    e6 = eisenstein(6, 3)
    assert [e6.coefficient(i) for i in range(3)] == [1, -504, -16632]
    assert eisenstein(4, 1).coefficient(0) == 1


def test_e2N_values():
    f = e2N(11, 2)
    assert f.coefficient(0) == mpq(5, 12)
    assert f.coefficient(1) == 1
    g = e2N(2, 3)
    assert [g.coefficient(i) for i in range(3)] == [mpq(1, 24), 1, 1]
    assert e2N(163, 1).coefficient(0) == mpq(27, 4)


def test_delta_leading_terms():
    d = delta(5)
    assert [d.coefficient(i) for i in range(5)] == [0, 1, -24, 252, -1472]


def test_delta_matches_eta_product():
    # q * prod (1 - q^n)^24 by brute force
    M = 60
    prod = QSeries(0, [mpq(1)], M)
    for n in range(1, M):
        prod = prod * QSeries.make(0, [mpq(1)] + [mpq(0)] * (n - 1) + [mpq(-1)], M)
    eta24 = (prod ** 24) * QSeries.monomial(mpq(1), 1, M + 1)
    assert eq_on_common_window(delta(M), eta24)


def test_e4_cubed_minus_e6_squared():
    M = 200
    lhs = eisenstein(4, M) ** 3 - eisenstein(6, M) ** 2
    assert eq_on_common_window(lhs, delta(M).scale(1728))


def test_invariant_quadruple_level_11():
    quad = invariant_quadruple(11, 3)
    assert [quad.a4.coefficient(i) for i in range(3)] == \
        [mpq(-3, 25), mpq(-3528, 125), mpq(-75816, 625)]
    assert [quad.a6.coefficient(i) for i in range(3)] == \
        [mpq(2, 125), mpq(-5112, 625), mpq(-649512, 3125)]
    assert quad.a4p.coefficient(0) == mpq(-3, 25)


@pytest.mark.parametrize("N", SPORADIC_SMALL)
def test_j_identity_domain(N):
    M = 100
    quad = invariant_quadruple(N, M)
    e4, d = eisenstein(4, M), delta(M)
    lhs = (quad.a4 ** 3).scale(6912)
    rhs_den = (quad.a4 ** 3).scale(4) + (quad.a6 ** 2).scale(27)
    # 6912 a4^3 * Delta = (4 a4^3 + 27 a6^2) * E4^3
    assert eq_on_common_window(lhs * d, rhs_den * e4 ** 3)


@pytest.mark.parametrize("N", SPORADIC_SMALL)
def test_j_identity_codomain(N):
    M = 100
    quad = invariant_quadruple(N, M)
    e4N = eisenstein(4, M).substitute_qN(N)
    dN = delta(M).substitute_qN(N)
    lhs = (quad.a4p ** 3).scale(6912)
    rhs_den = (quad.a4p ** 3).scale(4) + (quad.a6p ** 2).scale(27)
    assert eq_on_common_window(lhs * dN, rhs_den * e4N ** 3)


@pytest.mark.parametrize("N", (11, 27, 37))
def test_discriminant_identity(N):
    # 4 a4^3 + 27 a6^2 = -Delta / (16 L^6) with L the level form
    M = 80
    quad = invariant_quadruple(N, M)
    L = e2N(N, M)
    lhs = ((quad.a4 ** 3).scale(4) + (quad.a6 ** 2).scale(27)) * L ** 6
    assert eq_on_common_window(lhs, delta(M).scale(mpq(-1, 16)))
