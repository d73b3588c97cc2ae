"""Acceptance gate: one verdict line per criterion (see terminal summary).

Each criterion is a test; a decorator records PASS/FAIL so the summary
carries exactly one line per criterion regardless of capture settings.
"""

import functools
import random
import time

import pytest
from gmpy2 import mpq

from conftest import ACCEPTANCE_RESULTS

from x0iso.errors import BudgetExceeded
from x0iso.forms import delta, e2N, eisenstein, invariant_quadruple
from x0iso.heegner import cm_invariants, rational_reconstruct
from x0iso.moduli import (EllCurve, build_model, evaluate_pair,
                          evaluate_pair_external, identify, j_invariant,
                          squarefree_part, twist_factor)
from x0iso.relations import BiPoly, eval_bipoly_series
from x0iso.series import QSeries, eq_on_common_window
from x0iso.tables import TABLE1, TABLE3, rows_for_level


def criterion(n, desc):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kw):
            try:
                fn(*args, **kw)
            except BaseException as exc:
                ACCEPTANCE_RESULTS.append(
                    f"CRITERION {n:2d}: FAIL — {desc} ({type(exc).__name__})")
                raise
            ACCEPTANCE_RESULTS.append(f"CRITERION {n:2d}: PASS — {desc}")
        return wrapper
    return deco


_MODELS = {}


def model_for(N):
    if N not in _MODELS:
        t0 = time.monotonic()
        _MODELS[N] = (build_model(N), time.monotonic() - t0)
    return _MODELS[N]


# --- 1: invariant expansions at level 11 ---

# the q^4 coefficient of the printed a6 expansion reads 229154456/15625 in
# the source; the series computed from the defining formulas (and verified
# through the relation and both j-identities) gives 29154456/15625 — a
# dropped-digit misprint, recorded in the decisions ledger
A4_11 = ["-3/25", "-3528/125", "-75816/625", "1097856/3125",
         "593496/3125", "-106231824/78125"]
A6_11 = ["2/125", "-5112/625", "-649512/3125", "-485856/3125",
         "29154456/15625", "634190256/390625"]


@criterion(1, "level-11 a4/a6 expansions exact through q^5, under 1 s")
def test_criterion_1():
    t0 = time.monotonic()
    quad = invariant_quadruple(11, 6)
    assert [quad.a4.coefficient(i) for i in range(6)] == \
        [mpq(v) for v in A4_11]
    assert [quad.a6.coefficient(i) for i in range(6)] == \
        [mpq(v) for v in A6_11]
    assert time.monotonic() - t0 < 1.0


# --- 2: level-11 plane relation ---

RELATION_11 = {
    (6, 0): -29241, (5, 0): -23955822, (4, 1): -1351692, (3, 2): 572544,
    (4, 0): -15183229435, (3, 1): 7092313360, (2, 2): -1934162736,
    (1, 3): 235016704, (0, 4): -10061824, (3, 0): 103990630700,
    (2, 1): -301970625000, (1, 2): 47640642720, (0, 3): -4119072320,
    (2, 0): -2009614509375, (1, 1): 2923075650000, (0, 2): -2204530508400,
    (1, 0): 1296871230050, (0, 1): -5894869227500, (0, 0): 285311670611,
}


@criterion(2, "level-11 plane relation coefficient-exact up to sign, "
              "under 60 s")
def test_criterion_2():
    t0 = time.monotonic()
    model, _ = model_for(11)
    want = BiPoly({k: mpq(v) for k, v in RELATION_11.items()}).canonical()
    assert model.relation == want
    assert time.monotonic() - t0 < 60.0


# --- 3: level-11 map reconstruction from 8-coefficient generators ---

Q_POLY = {2: 25, 1: 86, 0: 89}
A_Y = {2: -17640, 1: -106344, 0: -107568}
A_X = {4: -75, 3: -93972, 2: -445362, 1: -881916, 0: -738867}
B_Y = {4: -127800, 3: -10626696, 2: -51849288, 1: -85057272, 0: -45566928}
B_X = {6: 250, 5: -3372780, 4: -33335514, 3: -136910656, 2: -317360754,
       1: -408243108, 0: -220844302}


def _xpoly(table, ydeg=0):
    return BiPoly({(i, ydeg): mpq(c) for i, c in table.items()})


@criterion(3, "level-11 external maps reproduce Q and A_Y/A_X/B_Y/B_X "
              "exactly, under 5 min")
def test_criterion_3(model11_ext):
    t0 = time.monotonic()
    ext = model11_ext.external
    Q = _xpoly(Q_POLY)
    assert ext.map_a4.den == Q * Q
    assert ext.map_a4.num == _xpoly(A_Y, 1) + _xpoly(A_X)
    assert ext.map_a6.den == Q * Q * Q
    assert ext.map_a6.num == _xpoly(B_Y, 1) + _xpoly(B_X)
    # fixture creation is itself fast; rebuild-free check stays well inside
    assert time.monotonic() - t0 < 300.0


# --- 4: Table 1 ---

@criterion(4, "Table 1 quadruples and identifications reproduced at the "
              "three external points")
def test_criterion_4(model11_ext, catalog):
    t0 = time.monotonic()
    for row in TABLE1:
        pair = evaluate_pair_external(model11_ext, *row.point)
        assert (pair.domain.A, pair.domain.B) == (row.a4, row.a6)
        assert (pair.codomain.A, pair.codomain.B) == (row.a4p, row.a6p)
        pair = identify(pair, catalog)
        dl, dd, cl, cd = pair.identification
        assert (dl, cl) == (row.dom_label, row.cod_label)
        # twist factors are classes modulo squares
        assert dd == squarefree_part(row.dom_twist)
        assert cd == squarefree_part(row.cod_twist)
    assert time.monotonic() - t0 < 60.0


# --- 5: Table 3, algebraic levels ---

@criterion(5, "Table 3 rows for levels 11/14/15/17/19/21/27 regenerated "
              "algebraically, under 10 min per level")
def test_criterion_5():
    for N in (11, 14, 15, 17, 19, 21, 27):
        model, built = model_for(N)
        t0 = time.monotonic()
        for row in rows_for_level(TABLE3, N):
            assert model.relation.eval_point(row.a4, row.a6) == 0
            pair = evaluate_pair(model, row.a4, row.a6)
            assert (pair.codomain.A, pair.codomain.B) == (row.a4p, row.a6p)
        assert built + (time.monotonic() - t0) < 600.0, f"level {N} too slow"


# --- 6: Heegner route at 163 ---

@criterion(6, "level-163 CM invariants exact at 4000 bits; j = -640320^3; "
              "D' = -163 D with 4344 (not 4544) as the domain twist")
def test_criterion_6(catalog):
    t0 = time.monotonic()
    res = cm_invariants(163, prec=4000)
    row = rows_for_level(TABLE3, 163)[0]
    lam = mpq(-1, 24)   # recorded row scales the level form by -24
    assert res.a4 * lam ** 2 == row.a4
    assert res.a6 * lam ** 3 == row.a6
    assert res.a4p * lam ** 2 == row.a4p
    assert res.a6p * lam ** 3 == row.a6p
    assert row.a6p == mpq(-185801, 3420558477361152)
    # the bound 1e-600 underflows to 0.0 as a float, as does the actual
    # residual (~1e-1200); <= keeps the check sound, since any nonzero
    # representable residual (>= 5e-324) would still fail it
    assert res.residual <= 1e-600
    dom = EllCurve(row.a4, row.a6)
    cod = EllCurve(row.a4p, row.a6p)
    assert j_invariant(dom) == -640320 ** 3
    ref = catalog.get_curve("26569.a1").short_curve()
    D = twist_factor(ref, dom)
    Dp = twist_factor(ref, cod)
    assert Dp == squarefree_part(-163 * D)
    # which of the two printings is right: compare square classes
    assert D == squarefree_part(4344)
    assert D != squarefree_part(4544)
    assert squarefree_part(-163 * 4344) == Dp
    assert time.monotonic() - t0 < 600.0


# --- 7: route agreement and budget skips at 37/43/67 ---

@criterion(7, "CM route equals Table 3 at 19/43/67; algebraic route at "
              "37/43/67 reproduces the row or emits a dimension-named "
              "BUDGET-SKIP")
def test_criterion_7():
    for N in (19, 43, 67):
        res = cm_invariants(N, prec=2000)
        row = rows_for_level(TABLE3, N)[0]
        assert (res.a4, res.a6, res.a4p, res.a6p) == \
            (row.a4, row.a6, row.a4p, row.a6p)
    for N in (37, 43, 67):
        row = rows_for_level(TABLE3, N)[0]
        try:
            model, _ = model_for(N)
        except BudgetExceeded as exc:
            assert exc.dimension is not None
            assert exc.dimension > exc.budget
            ACCEPTANCE_RESULTS.append(
                f"  (level {N}: BUDGET-SKIP, dimension {exc.dimension} "
                f"over budget {exc.budget})")
            continue
        assert model.relation.eval_point(row.a4, row.a6) == 0
        pair = evaluate_pair(model, row.a4, row.a6)
        assert (pair.codomain.A, pair.codomain.B) == (row.a4p, row.a6p)


# --- 8: duality across Table 1 and catalog degrees ---

@criterion(8, "Table 1 rows 1-2 exhibit the dual-isogeny j-swap; every "
              "Table 3 level divides a catalog isogeny degree")
def test_criterion_8(catalog):
    r1, r2 = TABLE1[0], TABLE1[1]
    j = lambda a, b: j_invariant(EllCurve(a, b))
    assert j(r1.a4p, r1.a6p) == j(r2.a4, r2.a6)
    assert j(r2.a4p, r2.a6p) == j(r1.a4, r1.a6)
    for row in TABLE3:
        for label in (row.dom_label, row.cod_label):
            degs = catalog.get_curve(label).isogeny_degrees
            assert any(d % row.level == 0 for d in degs)


# --- 9: level-67 canonical-model data ---

X67_BASIS = {
    "x0": (3, (1, -1, -1, 1, 0, -1, 0)),
    "x1": (2, (1, 0, 0, -1, -1, -1, -1, 1)),
    "x2": (2, (1, -1, -1, 0, -1, 1, 2, 2)),
    "x3": (2, (1, 1, 0, 2, -1, -1, 0, -1)),
    "x4": (1, (1, 0, 0, 0, 2, 0, 0, 0, -1)),
}

# quadrics as {(i, j): c} acting on (x_i, x_j) with i <= j
X67_QUADRICS = (
    {(0, 0): 1, (0, 2): -1, (0, 4): 1, (1, 1): -1, (1, 3): -1, (1, 4): 1,
     (2, 2): -1, (2, 3): 1, (2, 4): -1},
    {(0, 1): 1, (0, 2): -1, (0, 4): 1, (1, 1): -2, (2, 2): -1, (2, 3): 1,
     (2, 4): -1, (3, 3): -1, (3, 4): 1},
    {(0, 3): 1, (1, 1): -1, (1, 2): 1, (1, 3): 1, (1, 4): -1, (2, 4): 1},
)

X67_POINT = (3, -5, -4, 2, 9)


@criterion(9, "level-67 quadrics vanish on the printed basis window and at "
              "the rational point [3:-5:-4:2:9]")
def test_criterion_9():
    basis = [QSeries(v, [mpq(c) for c in cs], 10)
             for v, cs in X67_BASIS.values()]
    for quad in X67_QUADRICS:
        series = None
        value = 0
        for (i, j), c in quad.items():
            term = (basis[i] * basis[j]).scale(c)
            series = term if series is None else series + term
            value += c * X67_POINT[i] * X67_POINT[j]
        assert series.is_zero, f"quadric {quad} does not vanish on the basis"
        assert value == 0, f"quadric {quad} does not vanish at the point"


# --- 10: property suites ---

@criterion(10, "series ring laws, discriminant and j-identities, and "
               "reconstruction stress suite all hold")
def test_criterion_10():
    rng = random.Random(67)

    def rand_series():
        val = rng.randint(-3, 3)
        n = rng.randint(1, 6)
        coeffs = [mpq(rng.randint(-9, 9), rng.randint(1, 9))
                  for _ in range(n)]
        return QSeries.make(val, coeffs, val + n + rng.randint(0, 3))

    for _ in range(200):
        f, g, h = rand_series(), rand_series(), rand_series()
        assert f * g == g * f
        assert (f * g) * h == f * (g * h)
        assert eq_on_common_window(f * (g + h), f * g + f * h)
        N = rng.randint(2, 5)
        assert eq_on_common_window((f * g).substitute_qN(N),
                                   f.substitute_qN(N) * g.substitute_qN(N))
        fnz = f if f.is_zero else f + QSeries.monomial(mpq(10), f.val, f.trunc)
        if not fnz.is_zero and fnz.coefficient(fnz.val) != 0:
            prod = fnz * fnz.invert()
            for e in range(prod.val, prod.trunc):
                assert prod.coefficient(e) == (1 if e == 0 else 0)

    M = 200
    assert eq_on_common_window(eisenstein(4, M) ** 3 - eisenstein(6, M) ** 2,
                               delta(M).scale(1728))

    M = 100
    e4, d = eisenstein(4, M), delta(M)
    for N in (11, 14, 15, 17, 19, 21, 27, 37, 43, 67):
        quad = invariant_quadruple(N, M)
        disc = (quad.a4 ** 3).scale(4) + (quad.a6 ** 2).scale(27)
        assert eq_on_common_window((quad.a4 ** 3).scale(6912) * d,
                                   disc * e4 ** 3)
        discp = (quad.a4p ** 3).scale(4) + (quad.a6p ** 2).scale(27)
        assert eq_on_common_window(
            (quad.a4p ** 3).scale(6912) * d.substitute_qN(N),
            discp * (e4.substitute_qN(N)) ** 3)

    import gmpy2
    failures = 0
    for _ in range(1000):
        p = rng.randint(-10 ** 18, 10 ** 18)
        q = rng.randint(1, 10 ** 18)
        with gmpy2.context(precision=256):
            approx = gmpy2.mpfr(p) / gmpy2.mpfr(q)
        if rational_reconstruct(approx, 10 ** 18, gate_bits=120) != mpq(p, q):
            failures += 1
    assert failures == 0
    from x0iso.errors import ReconstructionFailed
    with gmpy2.context(precision=256):
        pi = gmpy2.const_pi()
    with pytest.raises(ReconstructionFailed):
        rational_reconstruct(pi, 10 ** 6)
