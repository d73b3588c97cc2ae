"""Analytic route for CM levels.

Evaluates the exact q-series of the Eisenstein sources at a Heegner point
to thousands of bits, forms the four invariants, and recovers exact
rationals by continued-fraction reconstruction.  All float work happens in
explicit local gmpy2 contexts; nothing touches the global precision.
"""

import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc, mpfr, mpq, mpz

from .errors import (ImaginaryResidueTooLarge, PrecisionUnreachable,
                     ReconstructionFailed, UnsupportedLevel)
from .forms import sigma_table

GUARD_BITS = 64
TERM_CAP = 2_000_000

CM_TAU_LEVELS = (19, 43, 67, 163)

FORM_SOURCES = ("E4", "E6", "E2N", "E4N", "E6N")


@dataclass(frozen=True)
class HeegnerTau:
    """Exact quadratic datum tau = (a + sqrt(-d)) / c, realizable at any precision."""
    a: int
    d: int
    c: int

    def realize(self, prec):
        with gmpy2.context(precision=prec):
            root = gmpy2.sqrt(mpfr(self.d))
            return mpc(mpfr(self.a) / self.c, root / self.c)

    def __str__(self):
        return f"({self.a} + sqrt(-{self.d}))/{self.c}"


def heegner_tau(N):
    """tau = (-N + sqrt(-N)) / (2N) for the class-number-one CM levels."""
    if N not in CM_TAU_LEVELS:
        raise UnsupportedLevel(
            f"no built-in Heegner point for level {N}; supply tau explicitly")
    return HeegnerTau(-N, N, 2 * N)


@dataclass(frozen=True)
class BigComplex:
    """Arbitrary-precision complex value carrying its precision in bits."""
    re: object
    im: object
    prec: int

    @staticmethod
    def from_mpc(z, prec):
        return BigComplex(z.real, z.imag, prec)

    def _ctx(self, other=None):
        prec = self.prec if other is None else min(self.prec, other.prec)
        return gmpy2.context(precision=prec), prec

    def _binop(self, other, op):
        if not isinstance(other, BigComplex):
            other = BigComplex(mpfr(other), mpfr(0), self.prec)
        _, prec = self._ctx(other)
        with gmpy2.context(precision=prec):
            z = op(mpc(self.re, self.im), mpc(other.re, other.im))
        return BigComplex.from_mpc(z, prec)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def abs_im(self):
        return abs(self.im)


def _coefficients(source, level, T):
    """First T exact coefficients of a source series (step N for composed ones)."""
    if source == "E4":
        sig = sigma_table(4, T)
        return [mpq(1)] + [mpq(240 * sig[n]) for n in range(1, T)], 1
    if source == "E6":
        sig = sigma_table(6, T)
        return [mpq(1)] + [mpq(-504 * sig[n]) for n in range(1, T)], 1
    if source == "E2N":
        if level is None or level < 2:
            raise ValueError("E2N needs a level >= 2")
        sig = sigma_table(2, T)
        out = [mpq(level - 1, 24)]
        for n in range(1, T):
            c = mpq(sig[n])
            if n % level == 0:
                c -= level * sig[n // level]
            out.append(c)
        return out, 1
    if source in ("E4N", "E6N"):
        if level is None or level < 2:
            raise ValueError(f"{source} needs a level >= 2")
        coeffs, _ = _coefficients(source[:2], level, T)
        return coeffs, level
    raise ValueError(f"unknown coefficient source {source!r}")


def _term_count(source, im_tau, prec):
    """Smallest T with |q|^T * T^6 below the 2^-(prec+guard) target."""
    log_q = -2 * math.pi * im_tau  # natural log of |q|
    if log_q >= -1e-9:
        raise PrecisionUnreachable("tau is not in the upper half-plane")
    target = -(prec + GUARD_BITS) * math.log(2)
    T = max(8, int(math.ceil(target / log_q)))
    # polynomial cushion: divisor sums grow no faster than n^6 here
    while T < TERM_CAP and T * log_q + 6 * math.log(T) > target:
        T += max(1, T // 16)
    if T >= TERM_CAP:
        raise PrecisionUnreachable(
            f"|q| = {math.exp(log_q):.6f} needs more than {TERM_CAP} terms")
    return T


def eval_form(source, tau, prec, level=None, terms=None):
    """Partial sum of a source series at q = exp(2 pi i tau), tail below 2^-(prec+64)."""
    work = prec + GUARD_BITS
    if isinstance(tau, HeegnerTau):
        tau = tau.realize(work)
    with gmpy2.context(precision=work):
        if isinstance(tau, BigComplex):
            tau = mpc(tau.re, tau.im)
        else:
            tau = mpc(tau)
        im = float(tau.imag)
        if im <= 0:
            raise PrecisionUnreachable("Im(tau) must be positive")
        step_level = level if source in ("E4N", "E6N") else None
        eff_im = im * (step_level or 1)
        T = terms if terms is not None else _term_count(source, eff_im, prec)
        coeffs, step = _coefficients(source, level, T)
        two_pi_i = mpc(0, 2) * gmpy2.const_pi()
        q = gmpy2.exp(two_pi_i * tau)
        qs = q ** step
        total = mpc(0)
        power = mpc(1)
        for c in coeffs:
            if c:
                total += mpfr(c.numerator) / mpfr(c.denominator) * power
            power *= qs
    out = BigComplex.from_mpc(total, prec)
    return out, T


def rational_reconstruct(x, max_den, gate_bits=None):
    """Best continued-fraction convergent p/q with q <= max_den.

    Accepted only when |x - p/q| < 2^-gate (gate defaults to half the
    precision of x); otherwise ReconstructionFailed.
    """
    if isinstance(x, BigComplex):
        raise TypeError("reconstruct real values; check the imaginary part first")
    prec = x.precision
    if gate_bits is None:
        gate_bits = prec // 2
    with gmpy2.context(precision=prec):
        gate = mpfr(2) ** (-gate_bits)
        h0, h1 = mpz(1), mpz(0)  # numerators
        k0, k1 = mpz(0), mpz(1)  # denominators
        r = mpfr(x)
        best = None
        for _ in range(10 * prec):
            a = mpz(gmpy2.floor(r))
            h0, h1 = a * h0 + h1, h0
            k0, k1 = a * k0 + k1, k0
            if k0 > max_den:
                break
            cand = mpq(h0, k0)
            err = abs(mpfr(x) - mpfr(cand.numerator) / mpfr(cand.denominator))
            if best is None or err < best[1]:
                best = (cand, err)
            frac = r - a
            if frac == 0 or err == 0:
                break
            r = 1 / frac
        if best is not None and best[1] < gate:
            return best[0]
    raise ReconstructionFailed(
        f"no convergent with denominator <= {max_den} within 2^-{gate_bits}")


@dataclass(frozen=True)
class CMResult:
    level: int
    tau: object
    a4: object
    a6: object
    a4p: object
    a6p: object
    residual: float
    terms_used: int


def cm_invariants(N, prec=4000, tau=None, terms=None):
    """Exact invariant quadruple at the level-N Heegner point."""
    datum = tau if tau is not None else heegner_tau(N)
    work = prec + GUARD_BITS
    if isinstance(datum, HeegnerTau):
        tau_c = datum.realize(work)
    else:
        with gmpy2.context(precision=work):
            tau_c = mpc(datum)
    vals = {}
    terms_used = 0
    for source in FORM_SOURCES:
        v, T = eval_form(source, BigComplex.from_mpc(tau_c, work), prec,
                         level=N, terms=terms)
        vals[source] = v
        terms_used = max(terms_used, T)
    with gmpy2.context(precision=work):
        e4 = mpc(vals["E4"].re, vals["E4"].im)
        e6 = mpc(vals["E6"].re, vals["E6"].im)
        ell = mpc(vals["E2N"].re, vals["E2N"].im)
        e4n = mpc(vals["E4N"].re, vals["E4N"].im)
        e6n = mpc(vals["E6N"].re, vals["E6N"].im)
        l2 = ell * ell
        l3 = l2 * ell
        quad_c = (-e4 / (48 * l2), e6 / (864 * l3),
                  -e4n / (48 * l2), e6n / (864 * l3))
        im_gate = mpfr(2) ** (-(prec // 2))
        for z in quad_c:
            if abs(z.imag) > im_gate:
                raise ImaginaryResidueTooLarge(
                    f"imaginary part {z.imag} above 2^-{prec // 2}")
        max_den = mpz(2) ** (prec // 4)
        quad = []
        residual = mpfr(0)
        for z in quad_c:
            r = rational_reconstruct(z.real, max_den, gate_bits=prec // 2)
            quad.append(r)
            err = abs(z.real - mpfr(r.numerator) / mpfr(r.denominator))
            err = max(err, abs(z.imag))
            if err > residual:
                residual = err
        residual_f = float(residual)
    return CMResult(N, datum, quad[0], quad[1], quad[2], quad[3],
                    residual_f, terms_used)
