"""End-to-end isogeny-pair pipeline.

Builds the level-N curve model (generators, plane relation, primed-invariant
maps), evaluates rational points into explicit cyclic N-isogeny pairs, and
provides the elliptic-curve utilities used to identify the results against
reference curves: j-invariants, quadratic twists, twist factors.
"""

import os
from dataclasses import dataclass, replace

from gmpy2 import mpq, mpz

import sympy

from .errors import (DenominatorVanishes, NotQuadraticTwist, NotTwists,
                     PointAtInfinity, PointNotOnCurve, SingularCurve,
                     UnknownCurve)
from .forms import invariant_quadruple
from .relations import bootstrap_generator, express_in_generators, find_plane_relation
from .series import QSeries

SPORADIC_LEVELS = (11, 14, 15, 17, 19, 21, 27, 37, 43, 67, 163)
CM_LEVELS = (19, 27, 43, 67, 163)

DEFAULT_BUDGET = 230


def matrix_budget():
    """Configured cap on linear-algebra unknowns (env X0ISO_MATRIX_BUDGET)."""
    raw = os.environ.get("X0ISO_MATRIX_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


def index_gamma0(N):
    """Index of the level-N congruence subgroup in the modular group."""
    idx = N
    for p in sympy.primefactors(N):
        idx = idx // p * (p + 1)
    return idx


def default_dmax(N):
    """Total degree of the plane relation between the generators."""
    return index_gamma0(N) // 2


def default_order(dmax):
    """Series order policy: dominated by the relation unknown count."""
    return 4 * (dmax + 1) ** 2 + 64


# ---------------------------------------------------------------------------
# curve types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllCurve:
    """Short Weierstrass curve y^2 = x^3 + A x + B."""
    A: object
    B: object

    def __post_init__(self):
        object.__setattr__(self, "A", mpq(self.A))
        object.__setattr__(self, "B", mpq(self.B))
        if 4 * self.A ** 3 + 27 * self.B ** 2 == 0:
            raise SingularCurve(f"discriminant vanishes for A={self.A}, B={self.B}")


def j_invariant(E):
    """Exact j-invariant 6912 A^3 / (4 A^3 + 27 B^2)."""
    disc = 4 * E.A ** 3 + 27 * E.B ** 2
    return 6912 * E.A ** 3 / disc


def quadratic_twist(E, D):
    """Twist (A, B) -> (D^2 A, D^3 B)."""
    D = mpq(D)
    return EllCurve(D * D * E.A, D ** 3 * E.B)


def squarefree_part(r):
    """Squarefree integer in the square class of a nonzero rational."""
    r = mpq(r)
    if r == 0:
        raise ValueError("zero has no square class")
    n = mpz(r.numerator * r.denominator)
    sign = 1 if n > 0 else -1
    out = mpz(1)
    for p, e in sympy.factorint(int(abs(n))).items():
        if e % 2:
            out *= p
    return int(sign * out)


def _rational_sqrt(r):
    """Exact square root of a nonnegative rational, or None."""
    r = mpq(r)
    if r < 0:
        return None
    pn, pd = mpz(r.numerator), mpz(r.denominator)
    sn, sd = sympy.integer_nthroot(int(pn), 2), sympy.integer_nthroot(int(pd), 2)
    if sn[1] and sd[1]:
        return mpq(sn[0], sd[0])
    return None


def _rational_cbrt(r):
    """Exact cube root of a rational, or None."""
    r = mpq(r)
    sign = 1 if r >= 0 else -1
    pn, pd = mpz(abs(r.numerator)), mpz(r.denominator)
    sn, sd = sympy.integer_nthroot(int(pn), 3), sympy.integer_nthroot(int(pd), 3)
    if sn[1] and sd[1]:
        return sign * mpq(sn[0], sd[0])
    return None


def twist_factor(E1, E2):
    """Squarefree D with E2 isomorphic over the rationals to twist(E1, D).

    A twist factor is only determined modulo squares, so the squarefree
    representative is the canonical answer.  Generic branch (j not 0 or
    1728): D is the squarefree part of (B2 A1)/(B1 A2), verified through
    the scaling relations A2 = D^2 A1 s^4, B2 = D^3 B1 s^6.  The
    j = 0 / 1728 branches return the minimal quadratic twist datum when
    one exists.
    """
    j1, j2 = j_invariant(E1), j_invariant(E2)
    if j1 != j2:
        raise NotTwists(f"j-invariants differ: {j1} vs {j2}")
    if j1 == 1728:  # B = 0 up to isomorphism scaling
        if E1.B != 0 or E2.B != 0:
            # scale away: same j means both have B=0 models; only exact B=0 supported
            raise NotQuadraticTwist("j=1728 comparison requires B=0 models")
        d2 = _quartic_free(E2.A / E1.A)
        root = _rational_sqrt(d2)
        if root is None:
            raise NotQuadraticTwist(f"A-ratio {E2.A / E1.A} is not a square times a fourth power")
        return squarefree_part(root) if root != 1 else 1
    if j1 == 0:  # A = 0
        if E1.A != 0 or E2.A != 0:
            raise NotQuadraticTwist("j=0 comparison requires A=0 models")
        c = _rational_cbrt(E2.B / E1.B)
        if c is None:
            raise NotQuadraticTwist(f"B-ratio {E2.B / E1.B} is not a cube")
        return squarefree_part(c)
    r = (E2.B * E1.A) / (E1.B * E2.A)
    D = squarefree_part(r)
    u = E2.A / (D * D * E1.A)    # should equal s^4
    v = E2.B / (D ** 3 * E1.B)   # should equal s^6
    if u <= 0 or v <= 0 or v * v != u ** 3 or _rational_sqrt(u) is None:
        raise NotQuadraticTwist(f"no scaling witnesses twist factor {D}")
    return D


def _quartic_free(r):
    """Rational with fourth powers removed from numerator and denominator."""
    r = mpq(r)
    n = mpz(r.numerator * r.denominator ** 3)  # clear to integer class mod 4th powers
    sign = 1 if n > 0 else -1
    out = mpz(1)
    for p, e in sympy.factorint(int(abs(n))).items():
        out *= mpz(p) ** (e % 4)
    return mpq(sign * out)


# ---------------------------------------------------------------------------
# models and evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExternalModel:
    """User-supplied plane model attached to a level (generators X, Y)."""
    relation: object          # BiPoly in (X, Y)
    X: QSeries                # full re-expansions of the generators
    Y: QSeries
    map_a4: object            # RationalExpr in (X, Y) for each invariant
    map_a6: object
    map_a4p: object
    map_a6p: object


@dataclass(frozen=True)
class CurveModel:
    level: int
    quadruple: object         # InvariantQuadruple
    relation: object          # BiPoly in (a4, a6)
    map_a4p: object           # RationalExpr of a4' in (a4, a6)
    map_a6p: object
    external: object = None   # optional ExternalModel


@dataclass(frozen=True)
class IsogenyPair:
    level: int
    point: tuple
    domain: EllCurve
    codomain: EllCurve
    identification: object = None


def build_model(N, order=None, dmax=None, budget=None, express_extra=4):
    """Generators, plane relation and primed-invariant maps for level N."""
    if N < 2:
        raise ValueError("level must be >= 2")
    if dmax is None:
        dmax = default_dmax(N)
    if order is None:
        order = default_order(dmax)
    if budget is None:
        budget = matrix_budget()
    quad = invariant_quadruple(N, order)
    relation = find_plane_relation(quad.a4, quad.a6, dmax, budget=budget)
    bound = dmax + express_extra
    shared = {}
    map_a4p = express_in_generators(quad.a4p, quad.a4, quad.a6, relation,
                                    bound, bound, budget=budget, shared=shared)
    map_a6p = express_in_generators(quad.a6p, quad.a4, quad.a6, relation,
                                    bound, bound, budget=budget, shared=shared)
    return CurveModel(N, quad, relation, map_a4p, map_a6p)


def evaluate_pair(model, x, y):
    """Domain/codomain curve pair at a rational point of the plane model."""
    x, y = mpq(x), mpq(y)
    if model.relation.eval_point(x, y) != 0:
        raise PointNotOnCurve(
            f"({x}, {y}) does not satisfy the level-{model.level} relation")
    a4p = model.map_a4p.eval_point(x, y)
    a6p = model.map_a6p.eval_point(x, y)
    domain = EllCurve(x, y)
    codomain = EllCurve(a4p, a6p)
    return IsogenyPair(model.level, (x, y), domain, codomain)


def attach_external_model(model, X_partial, Y_partial, ext_relation,
                          bounds=None, map_bounds=(8, 8)):
    """Bootstrap a partially known external model and wire up its maps.

    The partial generator expansions are completed against the in-house
    generators, the supplied curve equation is verified on the full window
    (this is the decisive consistency check for the completion), and the
    four invariants are expressed as rational functions of the external
    generators.
    """
    from .errors import InconsistentPartial
    quad = model.quadruple
    aux = ((quad.a4p, 2), (quad.a6p, 3))
    Xf = bootstrap_generator(X_partial, quad.a4, quad.a6, model.relation,
                             bounds, aux)
    Yf = bootstrap_generator(Y_partial, quad.a4, quad.a6, model.relation,
                             bounds, aux)
    m = min(Xf.trunc, Yf.trunc)
    if not ext_relation.eval_series(Xf.truncate(m), Yf.truncate(m)).is_zero:
        raise InconsistentPartial(
            "completed generators do not satisfy the supplied curve equation")
    dn, dd = map_bounds
    shared = {}
    exprs = [express_in_generators(t, Xf, Yf, ext_relation, dn, dd,
                                   shared=shared)
             for t in (quad.a4, quad.a6, quad.a4p, quad.a6p)]
    ext = ExternalModel(ext_relation, Xf, Yf, *exprs)
    return replace(model, external=ext)


def evaluate_pair_external(model, X0, Y0):
    """Evaluate through an attached external model at one of its points."""
    if model.external is None:
        raise ValueError("model has no attached external generators")
    X0, Y0 = mpq(X0), mpq(Y0)
    ext = model.external
    if ext.relation.eval_point(X0, Y0) != 0:
        raise PointNotOnCurve(
            f"({X0}, {Y0}) does not satisfy the external curve equation")
    x = ext.map_a4.eval_point(X0, Y0)
    y = ext.map_a6.eval_point(X0, Y0)
    a4p = ext.map_a4p.eval_point(X0, Y0)
    a6p = ext.map_a6p.eval_point(X0, Y0)
    if model.relation.eval_point(x, y) != 0:
        raise PointNotOnCurve(
            f"image ({x}, {y}) leaves the plane model; maps inconsistent")
    return IsogenyPair(model.level, (X0, Y0), EllCurve(x, y), EllCurve(a4p, a6p))


def projective_guard(Z):
    """Reject points at infinity of an external model's projective closure."""
    if mpq(Z) == 0:
        raise PointAtInfinity("only affine points are evaluable in this chart")


def identify(pair, catalog):
    """Match domain and codomain against reference curves by j, with twists."""
    dom = _identify_curve(pair.domain, catalog)
    cod = _identify_curve(pair.codomain, catalog)
    ident = (dom[0], dom[1], cod[0], cod[1])
    return replace(pair, identification=ident)


def _identify_curve(E, catalog):
    j = j_invariant(E)
    for ref in catalog.all_curves():
        if ref.j == j:
            try:
                D = twist_factor(ref.short_curve(), E)
            except NotQuadraticTwist:
                continue
            return (ref.label, D)
    raise UnknownCurve(f"no reference curve with j = {j}")
