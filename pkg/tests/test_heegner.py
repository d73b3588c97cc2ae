import math
import random

import gmpy2
import pytest
from gmpy2 import mpq

from x0iso.errors import ReconstructionFailed, UnsupportedLevel
from x0iso.heegner import (HeegnerTau, cm_invariants, eval_form, heegner_tau,
                           rational_reconstruct)


def test_heegner_tau_levels():
    tau = heegner_tau(19)
    assert (tau.a, tau.d, tau.c) == (-19, 19, 38)
    with pytest.raises(UnsupportedLevel):
        heegner_tau(14)
    with pytest.raises(UnsupportedLevel):
        heegner_tau(27)  # no built-in point; callers supply tau explicitly


def test_realize_precision():
    tau = heegner_tau(163)
    z = tau.realize(300)
    # (-163 + sqrt(-163))/326: real part exactly -1/2
    assert gmpy2.to_binary(z.real) == gmpy2.to_binary(gmpy2.mpfr("-0.5", 300))
    with gmpy2.context(precision=300):
        want = gmpy2.sqrt(gmpy2.mpfr(163)) / 326
        assert abs(z.imag - want) < gmpy2.mpfr(2) ** -290


def test_eval_form_constant_term_limit():
    # E4 at a high-imaginary tau is dominated by the constant term 1
    tau = HeegnerTau(0, 400, 2)  # i*10
    val, terms = eval_form("E4", tau, 128)
    with gmpy2.context(precision=128):
        assert abs(val.re - 1) < 1e-10
        assert abs(val.im) < 1e-20


def test_rational_reconstruct_exhaustive():
    rng = random.Random(163)
    failures = 0
    for _ in range(1000):
        p = rng.randint(-10 ** 18, 10 ** 18)
        q = rng.randint(1, 10 ** 18)
        x = mpq(p, q)
        with gmpy2.context(precision=256):
            approx = gmpy2.mpfr(x.numerator) / gmpy2.mpfr(x.denominator)
        got = rational_reconstruct(approx, 10 ** 18, gate_bits=120)
        if got != x:
            failures += 1
    assert failures == 0


def test_rational_reconstruct_rejects_pi():
    with gmpy2.context(precision=256):
        pi = gmpy2.const_pi()
    with pytest.raises(ReconstructionFailed):
        rational_reconstruct(pi, 10 ** 6)


@pytest.mark.parametrize("N, want", [
    (19, ("-19/2", "-361/32", "-1/38", "1/608")),
    (43, ("-215/36", "-12943/2304", "-5/1548", "7/99072")),
    (67, ("-3685/722", "-974113/219488", "-55/48374", "217/14705696")),
])
def test_cm_invariants_small_levels(N, want):
    res = cm_invariants(N, prec=1500)
    got = (res.a4, res.a6, res.a4p, res.a6p)
    assert got == tuple(mpq(w) for w in want)
    assert res.residual < 1e-100


def test_cm_invariants_level_27_custom_tau():
    res = cm_invariants(27, prec=1500, tau=HeegnerTau(-27, 27, 54))
    assert (res.a4, res.a6) == (mpq(-15, 2), mpq(-253, 32))
    assert (res.a4p, res.a6p) == (mpq(-5, 486), mpq(253, 629856))


def test_truncated_tail_breaks_reconstruction():
    # soundness of the term-count policy: forcing far fewer terms must not
    # silently return the right answer at full precision
    full = cm_invariants(19, prec=1500)
    try:
        starved = cm_invariants(19, prec=1500, terms=full.terms_used // 4)
        drifted = (starved.a4, starved.a6) != (full.a4, full.a6)
        assert drifted or starved.residual > full.residual
    except Exception:
        pass  # failing loudly is equally acceptable
