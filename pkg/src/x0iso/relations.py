"""Exact rational linear algebra on q-series.

Finds the plane relation satisfied by two series, expresses a target series
as a rational function of two generators, and completes partially known
generators to full precision.  The solvers follow a match-then-verify
discipline: a candidate found on the solve window is only accepted after
re-checking on a window twice as long.
"""

from gmpy2 import mpq, mpz, gcd, lcm, isqrt, invert as mod_invert, next_prime

try:
    import numpy as _np
except ImportError:  # pragma: no cover - numpy is a hard dependency in practice
    _np = None

from .errors import (AmbiguousExpression, AmbiguousRelation, BudgetExceeded,
                     DenominatorVanishes, InconsistentPartial,
                     InsufficientOrder, NoExpressionFound, NoRelationFound)
from .series import QSeries

DEFAULT_MARGIN = 10


# ---------------------------------------------------------------------------
# bivariate polynomials
# ---------------------------------------------------------------------------

def _grlex_key(ij):
    i, j = ij
    return (i + j, i)


class BiPoly:
    """Bivariate polynomial over exact rationals, sparse representation."""

    __slots__ = ("terms",)

    def __init__(self, terms):
        t = {}
        for (i, j), c in dict(terms).items():
            c = mpq(c)
            if c:
                t[(int(i), int(j))] = c
        object.__setattr__(self, "terms", t)

    def __setattr__(self, *a):
        raise AttributeError("BiPoly is immutable")

    @staticmethod
    def from_terms(triples):
        t = {}
        for i, j, c in triples:
            t[(i, j)] = t.get((i, j), mpq(0)) + mpq(c)
        return BiPoly(t)

    @property
    def is_zero(self):
        return not self.terms

    @property
    def total_degree(self):
        return max((i + j for i, j in self.terms), default=-1)

    @property
    def deg_x(self):
        return max((i for i, _ in self.terms), default=-1)

    @property
    def deg_y(self):
        return max((j for _, j in self.terms), default=-1)

    def leading_term(self):
        key = max(self.terms, key=_grlex_key)
        return key, self.terms[key]

    def __eq__(self, other):
        if not isinstance(other, BiPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __neg__(self):
        return BiPoly({k: -c for k, c in self.terms.items()})

    def __add__(self, other):
        t = dict(self.terms)
        for k, c in other.terms.items():
            t[k] = t.get(k, mpq(0)) + c
        return BiPoly(t)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, BiPoly):
            return BiPoly({k: c * mpq(other) for k, c in self.terms.items()})
        t = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                k = (i1 + i2, j1 + j2)
                t[k] = t.get(k, mpq(0)) + c1 * c2
        return BiPoly(t)

    __rmul__ = __mul__

    def x_coefficients(self, j):
        """Coefficients in x of the y^j part, as {i: c}."""
        return {i: c for (i, jj), c in self.terms.items() if jj == j}

    def terms_x(self):
        """Coefficient table {i: c} of a polynomial not involving y."""
        if self.deg_y > 0:
            raise ValueError("polynomial involves y")
        return self.x_coefficients(0)

    def eval_point(self, x, y):
        x, y = mpq(x), mpq(y)
        total = mpq(0)
        for j in sorted({j for _, j in self.terms}):
            row = self.x_coefficients(j)
            s = mpq(0)
            for i in range(max(row), -1, -1):
                s = s * x + row.get(i, mpq(0))
            total += s * y ** j
        return total

    def eval_series(self, X, Y):
        """Exact substitution of series for x and y (Horner per y-layer)."""
        jmax = self.deg_y
        result = None
        for j in range(jmax, -1, -1):
            row = self.x_coefficients(j)
            layer = _eval_xpoly_series(row, X)
            if result is None:
                result = layer
            else:
                result = result * Y
                if layer is not None:
                    result = result + layer if result is not None else layer
        if result is None:
            return QSeries.zero(min(X.trunc, Y.trunc))
        return result

    def canonical(self):
        """Integer coefficients, content 1, positive graded-lex leading coefficient."""
        if self.is_zero:
            return self
        den = mpz(1)
        for c in self.terms.values():
            den = lcm(den, c.denominator)
        ints = {k: mpz(c * den) for k, c in self.terms.items()}
        g = mpz(0)
        for v in ints.values():
            g = gcd(g, v)
        lead = max(ints, key=_grlex_key)
        sign = 1 if ints[lead] > 0 else -1
        return BiPoly({k: mpq(v, sign * g) for k, v in ints.items()})

    def to_string(self, xname="x", yname="y"):
        if self.is_zero:
            return "0"
        parts = []
        for (i, j) in sorted(self.terms, key=_grlex_key, reverse=True):
            c = self.terms[(i, j)]
            mono = []
            if i:
                mono.append(xname if i == 1 else f"{xname}^{i}")
            if j:
                mono.append(yname if j == 1 else f"{yname}^{j}")
            m = "*".join(mono)
            if not m:
                parts.append(f"{c}")
            elif c == 1:
                parts.append(m)
            elif c == -1:
                parts.append(f"-{m}")
            else:
                parts.append(f"{c}*{m}")
        s = " + ".join(parts)
        return s.replace("+ -", "- ")

    def __repr__(self):
        return f"<BiPoly {self.to_string()}>"


def _eval_xpoly_series(row, X):
    """Evaluate {i: c} as a polynomial in the series X, or None if empty.

    Horner; a constant term carries a generous trunc because every
    addition/multiplication tightens it to the correct window anyway.
    """
    if not row:
        return None
    imax = max(row)
    if imax == 0:
        return QSeries.monomial(row[0], 0, X.trunc)
    big = X.trunc + abs(X.val) * (imax + 1) + 1
    result = None
    for i in range(imax, -1, -1):
        if result is not None:
            result = result * X
        c = row.get(i)
        if c:
            term = QSeries.monomial(c, 0, big)
            result = term if result is None else result + term
    return result


def eval_bipoly_series(p, X, Y):
    return p.eval_series(X, Y)


def eval_bipoly_point(p, x, y):
    return p.eval_point(x, y)


class RationalExpr:
    """Quotient of two BiPoly in joint canonical form."""

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        if den.is_zero:
            raise ZeroDivisionError("denominator is identically zero")
        # joint canonicalization: integer coefficients, joint content 1,
        # positive leading coefficient of the denominator
        d = mpz(1)
        for c in list(num.terms.values()) + list(den.terms.values()):
            d = lcm(d, c.denominator)
        nt = {k: mpz(c * d) for k, c in num.terms.items()}
        dt = {k: mpz(c * d) for k, c in den.terms.items()}
        g = mpz(0)
        for v in list(nt.values()) + list(dt.values()):
            g = gcd(g, v)
        lead = max(dt, key=_grlex_key)
        if dt[lead] < 0:
            g = -g
        object.__setattr__(self, "num", BiPoly({k: mpq(v, g) for k, v in nt.items()}))
        object.__setattr__(self, "den", BiPoly({k: mpq(v, g) for k, v in dt.items()}))

    def __setattr__(self, *a):
        raise AttributeError("RationalExpr is immutable")

    def __eq__(self, other):
        if not isinstance(other, RationalExpr):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def eval_point(self, x, y):
        d = self.den.eval_point(x, y)
        if d == 0:
            raise DenominatorVanishes(f"denominator vanishes at ({x}, {y})")
        return self.num.eval_point(x, y) / d

    def eval_series(self, X, Y):
        return self.num.eval_series(X, Y) / self.den.eval_series(X, Y)

    def __repr__(self):
        return f"<RationalExpr ({self.num.to_string()}) / ({self.den.to_string()})>"


# ---------------------------------------------------------------------------
# exact nullspace
# ---------------------------------------------------------------------------

def _rows_to_int(rows):
    out = []
    for row in rows:
        d = mpz(1)
        for c in row:
            d = lcm(d, mpq(c).denominator)
        out.append([mpz(mpq(c) * d) for c in row])
    return out


def _normalize_vector(vec):
    """Scale an mpq vector to primitive integers with positive first entry."""
    d = mpz(1)
    for c in vec:
        d = lcm(d, c.denominator)
    ints = [mpz(c * d) for c in vec]
    g = mpz(0)
    for v in ints:
        g = gcd(g, v)
    if g == 0:
        return [mpq(0)] * len(vec)
    first = next(v for v in ints if v)
    if first < 0:
        g = -g
    return [mpq(v, g) for v in ints]


def nullspace(rows):
    """Exact rational nullspace basis via fraction-free (Bareiss) elimination.

    Pivot rule: first nonzero entry in column order, rows scanned in order.
    Returns primitive integer vectors, one per free column, in column order.
    """
    if not rows:
        return []
    ncols = len(rows[0])
    mat = _rows_to_int(rows)
    pivots = []
    r = 0
    prev = mpz(1)
    for c in range(ncols):
        pr = None
        for i in range(r, len(mat)):
            if mat[i][c]:
                pr = i
                break
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        piv = mat[r][c]
        for i in range(r + 1, len(mat)):
            mi = mat[i]
            f = mi[c]
            if f:
                for j in range(c, ncols):
                    mi[j] = (piv * mi[j] - f * mat[r][j]) // prev
            elif prev != piv:
                for j in range(c, ncols):
                    mi[j] = (piv * mi[j]) // prev
        prev = piv
        pivots.append((r, c))
        r += 1
        if r == len(mat):
            break
    pivot_cols = {c for _, c in pivots}
    basis = []
    for fc in range(ncols):
        if fc in pivot_cols:
            continue
        vec = [mpq(0)] * ncols
        vec[fc] = mpq(1)
        for ri, c in reversed(pivots):
            s = mpq(0)
            row = mat[ri]
            for j in range(c + 1, ncols):
                if vec[j]:
                    s += row[j] * vec[j]
            vec[c] = -s / row[c]
        basis.append(_normalize_vector(vec))
    return basis


# --- modular fast path -----------------------------------------------------

class _BadPrime(Exception):
    pass


def _reduce_mod(rows, p):
    out = []
    for row in rows:
        r = []
        for c in row:
            c = mpq(c)
            den = int(c.denominator) % p
            if den == 0:
                raise _BadPrime
            r.append(int(c.numerator) % p * pow(den, -1, p) % p)
        out.append(r)
    return out


def _rref_mod_np(mat, p):
    """Vectorized RREF mod p for p < 2^31 (products fit in int64)."""
    a = _np.array(mat, dtype=_np.int64)
    nrows, ncols = a.shape
    pivots = []
    r = 0
    for c in range(ncols):
        nz = _np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        pr = r + int(nz[0])
        if pr != r:
            a[[r, pr]] = a[[pr, r]]
        inv = pow(int(a[r, c]), -1, p)
        a[r] = a[r] * inv % p
        col = a[:, c].copy()
        col[r] = 0
        mask = col != 0
        if mask.any():
            a[mask] = (a[mask] - col[mask, None] * a[r][None, :]) % p
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    for i in range(nrows):
        mat[i] = [int(v) for v in a[i]]
    return pivots


def _rref_mod(mat, p):
    """In-place RREF mod p; returns ordered pivot columns."""
    if _np is not None and p < 2 ** 31 and mat:
        return _rref_mod_np(mat, p)
    ncols = len(mat[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = None
        for i in range(r, len(mat)):
            if mat[i][c]:
                pr = i
                break
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        inv = pow(mat[r][c], -1, p)
        mat[r] = [v * inv % p for v in mat[r]]
        rowr = mat[r]
        for i in range(len(mat)):
            if i != r and mat[i][c]:
                f = mat[i][c]
                mat[i] = [(v - f * w) % p for v, w in zip(mat[i], rowr)]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return pivots


def _nullbasis_mod(mat, pivots, p):
    ncols = len(mat[0])
    pivot_set = set(pivots)
    basis = []
    for fc in range(ncols):
        if fc in pivot_set:
            continue
        vec = [0] * ncols
        vec[fc] = 1
        for ri, c in enumerate(pivots):
            vec[c] = (-mat[ri][fc]) % p
        basis.append(vec)
    return basis


def nullity_mod_p(rows, p=None):
    """Nullity of the matrix modulo a prime; 0 proves the rational nullity is 0."""
    if not rows:
        return 0
    p = p or (2 ** 31 - 1)
    while True:
        try:
            mat = _reduce_mod(rows, p)
            break
        except _BadPrime:
            p = int(next_prime(p))
    pivots = _rref_mod(mat, p)
    return len(rows[0]) - len(pivots)


def _ratrec(u, m):
    """Rational reconstruction of u mod m with |num|, den <= sqrt(m/2)."""
    bound = isqrt(m // 2)
    r0, r1 = mpz(m), mpz(u % m)
    t0, t1 = mpz(0), mpz(1)
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound or gcd(r1, t1) != 1:
        return None
    return mpq(r1, t1)


def _verify_null(rows, vec):
    for row in rows:
        s = mpq(0)
        for c, v in zip(row, vec):
            if v:
                s += mpq(c) * v
        if s != 0:
            return False
    return True


def solve_nullspace(rows, fast_threshold=60, max_primes=512):
    """Exact nullspace basis; multi-prime CRT fast path for large systems.

    The fast path reconstructs candidate vectors from modular images and
    verifies them exactly against the original matrix, so results are
    identical to plain Bareiss elimination (up to normalization, which is
    canonical in both paths).  Primes stay below 2^31 so the per-prime
    elimination runs on machine integers; reconstruction is attempted on a
    doubling schedule to keep its cost subordinate.
    """
    if not rows:
        return []
    ncols = len(rows[0])
    if ncols <= fast_threshold:
        return nullspace(rows)
    p = 2 ** 30
    best_pivots = None
    residues = []   # (p, basis mod p)
    next_attempt = 2
    for _ in range(max_primes):
        p = int(next_prime(p))
        try:
            mat = _reduce_mod(rows, p)
        except _BadPrime:
            continue
        pivots = _rref_mod(mat, p)
        if best_pivots is None or len(pivots) > len(best_pivots):
            best_pivots = pivots
            residues = []
        if pivots != best_pivots:
            continue
        if len(best_pivots) == ncols:
            return []
        residues.append((p, _nullbasis_mod(mat, pivots, p)))
        if len(residues) < next_attempt:
            continue
        next_attempt = max(next_attempt + 2, len(residues) * 2)
        candidate = _crt_reconstruct(residues, ncols)
        if candidate is not None and all(_verify_null(rows, v) for v in candidate):
            return [_normalize_vector(v) for v in candidate]
    return nullspace(rows)


def _crt_reconstruct(residues, ncols):
    if len(residues) < 2:
        return None
    modulus = mpz(1)
    nvecs = len(residues[0][1])
    combined = [[mpz(0)] * ncols for _ in range(nvecs)]
    for p, basis in residues:
        if len(basis) != nvecs:
            return None
        p = mpz(p)
        if modulus == 1:
            combined = [[mpz(x) for x in vec] for vec in basis]
            modulus = p
            continue
        inv = mod_invert(modulus % p, p)
        for vi in range(nvecs):
            for ci in range(ncols):
                a = combined[vi][ci]
                delta = ((mpz(basis[vi][ci]) - a) * inv) % p
                combined[vi][ci] = a + modulus * delta
        modulus *= p
    out = []
    for vec in combined:
        rats = []
        for x in vec:
            r = _ratrec(x, modulus)
            if r is None:
                return None
            rats.append(r)
        out.append(rats)
    return out


# ---------------------------------------------------------------------------
# monomial bases of series
# ---------------------------------------------------------------------------

class _SeriesMonomials:
    """Lazy cache of products X^i * Y^j truncated to a working window."""

    def __init__(self, X, Y):
        self.X_full = X
        self.Y_full = Y
        self.window = 0
        self.cache = {}

    def set_window(self, window):
        if window > self.window:
            self.window = window
            self.cache = {}

    def _truncated(self, s):
        return s.truncate(s.val + self.window) if not s.is_zero else s

    def get(self, i, j):
        key = (i, j)
        got = self.cache.get(key)
        if got is not None:
            return got
        if i == 0 and j == 0:
            s = QSeries.one(self.window)
        elif i > 0:
            s = self.get(i - 1, j) * self._truncated(self.X_full)
        else:
            s = self.get(0, j - 1) * self._truncated(self.Y_full)
        self.cache[key] = s
        return s


# --- modular-image monomial ladder (cheap prefilter arithmetic) ------------

def _conv_mod(a, b, p, n):
    """First n entries of the convolution of residue lists, via packing.

    Residues are packed into one big integer with slots wide enough that
    column sums cannot carry, so a single big multiply performs the whole
    convolution in C.
    """
    slot = (2 * p.bit_length()) + max(1, min(len(a), len(b))).bit_length() + 1
    pa = mpz(0)
    for c in reversed(a):
        pa = (pa << slot) | c
    pb = mpz(0)
    for c in reversed(b):
        pb = (pb << slot) | c
    prod = pa * pb
    mask = (mpz(1) << slot) - 1
    out = []
    for k in range(n):
        out.append(int((prod >> (slot * k)) & mask) % p)
    return out


class _ModLadder:
    """Monomial series X^i Y^j reduced mod p on a fixed window.

    Entries are (valuation, residue list of the window coefficients).
    Raises _BadPrime if a coefficient denominator is divisible by p.
    """

    def __init__(self, X, Y, window, p):
        self.p = p
        self.window = window
        self.cache = {}
        self.xv = X.val if not X.is_zero else 0
        self.yv = Y.val if not Y.is_zero else 0
        self.xc = self._reduce(X)
        self.yc = self._reduce(Y)

    def _reduce(self, s):
        if s.trunc - s.val < self.window:
            raise InsufficientOrder(
                f"series window {s.trunc - s.val} shorter than required {self.window}")
        out = []
        for k in range(self.window):
            c = s.coefficient(s.val + k)
            den = int(c.denominator) % self.p
            if den == 0:
                raise _BadPrime
            out.append(int(c.numerator) % self.p * pow(den, -1, self.p) % self.p)
        return out

    def get(self, i, j):
        key = (i, j)
        got = self.cache.get(key)
        if got is not None:
            return got
        if i == 0 and j == 0:
            entry = (0, [1] + [0] * (self.window - 1))
        elif i > 0:
            v, c = self.get(i - 1, j)
            entry = (v + self.xv, _conv_mod(c, self.xc, self.p, self.window))
        else:
            v, c = self.get(0, j - 1)
            entry = (v + self.yv, _conv_mod(c, self.yc, self.p, self.window))
        self.cache[key] = entry
        return entry

    def coefficient(self, entry, e):
        v, c = entry
        k = e - v
        if k < 0 or k >= len(c):
            return 0
        return c[k]


def _monomials_upto(d, ymax=None):
    out = []
    for t in range(d + 1):
        for i in range(t, -1, -1):
            j = t - i
            if ymax is not None and j > ymax:
                continue
            out.append((i, j))
    return out


def _window_rows(columns, lo, hi):
    """Rows of coefficients for exponents lo..hi-1, one row per exponent."""
    cols = [[s.coefficient(e) for e in range(lo, hi)] for s in columns]
    return [list(r) for r in zip(*cols)]


# ---------------------------------------------------------------------------
# plane relation
# ---------------------------------------------------------------------------

_PREFILTER_PRIME = 2 ** 31 - 1


def _mod_prefilter_nullity(ladder, monos, lo, hi):
    """Nullity mod p of the coefficient matrix, from the modular ladder."""
    entries = [ladder.get(i, j) for (i, j) in monos]
    mat = [[ladder.coefficient(ent, e) for ent in entries]
           for e in range(lo, hi)]
    pivots = _rref_mod(mat, ladder.p)
    return len(monos) - len(pivots)


def _make_ladder(f, g, window):
    p = _PREFILTER_PRIME
    while True:
        try:
            return _ModLadder(f, g, window, p)
        except _BadPrime:
            p = int(next_prime(p))


def find_plane_relation(f, g, dmax, margin=DEFAULT_MARGIN, budget=None,
                        min_degree=1):
    """Minimal-total-degree polynomial P with P(f, g) = 0 on the known window.

    Searches total degree d = min_degree..dmax.  Absence of a relation at
    lower degrees is proved cheaply by a single-prime modular image (a
    rational nullvector is primitive-integral, hence survives reduction);
    the exact system is built and solved only at a degree where the
    modular image has nonzero nullity, and the solution is re-verified on
    a window twice as long before being accepted.
    """
    if f.is_zero or g.is_zero:
        raise NoRelationFound("zero series have no primitive plane relation")
    dcap = dmax
    if budget is not None:
        while dcap > 0 and len(_monomials_upto(dcap)) > budget:
            dcap -= 1
    U_cap = len(_monomials_upto(max(dcap, min_degree)))
    window = 2 * (U_cap + margin) + 2
    avail = min(f.trunc - f.val, g.trunc - g.val)
    window = min(window, avail)
    ladder = _make_ladder(f, g, window)
    monos_cache = _SeriesMonomials(f, g)
    for d in range(min_degree, dmax + 1):
        monos = _monomials_upto(d)
        U = len(monos)
        if budget is not None and U > budget:
            raise BudgetExceeded(
                f"relation search needs {U} unknowns at degree {d}, budget {budget}",
                dimension=U, budget=budget)
        vmin = min(i * f.val + j * g.val for (i, j) in monos)
        if window < U + margin:
            raise InsufficientOrder(
                f"need {U + margin} coefficients at degree {d}, have {window}")
        if _mod_prefilter_nullity(ladder, monos, vmin, vmin + U + margin) == 0:
            continue
        # modular image admits a relation: build and solve exactly
        verify_len = min(2 * (U + margin), window)
        monos_cache.set_window(verify_len + 2)
        columns = [monos_cache.get(i, j) for (i, j) in monos]
        tmax = min(s.trunc for s in columns)
        solve_hi = vmin + (U + margin)
        verify_hi = min(vmin + verify_len, tmax)
        rows = _window_rows(columns, vmin, solve_hi)
        basis = solve_nullspace(rows)
        verified = []
        for vec in basis:
            extra = _window_rows(columns, solve_hi, verify_hi)
            if all(sum((mpq(c) * vec[k] for k, c in enumerate(row) if vec[k]), mpq(0)) == 0
                   for row in extra):
                verified.append(BiPoly({monos[k]: vec[k] for k in range(U)}).canonical())
        if len(verified) == 1:
            return verified[0]
        if len(verified) > 1:
            raise AmbiguousRelation(
                f"{len(verified)} independent relations at degree {d}; "
                "increase the order M")
    raise NoRelationFound(f"no relation up to total degree {dmax}")


# ---------------------------------------------------------------------------
# expression in generators
# ---------------------------------------------------------------------------

def _reduce_series_mod(s, window, p):
    """Residues of the first `window` coefficients of s, from its valuation."""
    if s.trunc - s.val < window:
        raise InsufficientOrder(
            f"series window {s.trunc - s.val} shorter than required {window}")
    out = []
    for k in range(window):
        c = s.coefficient(s.val + k)
        den = int(c.denominator) % p
        if den == 0:
            raise _BadPrime
        out.append(int(c.numerator) % p * pow(den, -1, p) % p)
    return out


def _express_prefilter(ladder, tres, tval, num_monos, den_monos, margin):
    """Nullity mod p of the matching system P(X,Y) = target * D(X,Y)."""
    p = ladder.p
    cols = []
    vals = []
    for (i, j) in num_monos:
        ent = ladder.get(i, j)
        cols.append(ent[1])
        vals.append(ent[0])
    n = ladder.window
    for (i, j) in den_monos:
        ent = ladder.get(i, j)
        cols.append([p - c if c else 0 for c in _conv_mod(tres, ent[1], p, n)])
        vals.append(ent[0] + tval)
    U = len(cols)
    vmin = min(vals)
    hi = vmin + U + margin
    mat = []
    for e in range(vmin, hi):
        row = []
        for c, v in zip(cols, vals):
            k = e - v
            row.append(c[k] if 0 <= k < len(c) else 0)
        mat.append(row)
    pivots = _rref_mod(mat, p)
    return U - len(pivots)


def _exact_express_solve(target, X, Y, num_monos, den_monos, margin,
                         monos_cache):
    """Solve and doubly verify P = target*D; return verified (num, den) list."""
    U = len(num_monos) + len(den_monos)
    verify_len = 2 * (U + margin)
    monos_cache.set_window(verify_len + 2)
    num_cols = [monos_cache.get(i, j) for (i, j) in num_monos]
    tw = target.truncate(target.val + verify_len + 2)
    den_cols = [-(tw * monos_cache.get(i, j)) for (i, j) in den_monos]
    columns = num_cols + den_cols
    vmin = min(s.val for s in columns)
    tmax = min(s.trunc for s in columns)
    if tmax - vmin < U + margin:
        raise InsufficientOrder(
            f"need {U + margin} coefficients, have {tmax - vmin}")
    solve_hi = vmin + (U + margin)
    verify_hi = min(vmin + verify_len, tmax)
    rows = _window_rows(columns, vmin, solve_hi)
    basis = solve_nullspace(rows)
    checked = []
    extra = _window_rows(columns, solve_hi, verify_hi)
    for vec in basis:
        if not all(sum((mpq(c) * vec[k] for k, c in enumerate(row) if vec[k]), mpq(0)) == 0
                   for row in extra):
            continue
        num = BiPoly({num_monos[k]: vec[k] for k in range(len(num_monos))})
        den = BiPoly({den_monos[k]: vec[len(num_monos) + k]
                      for k in range(len(den_monos))})
        if not den.is_zero:
            checked.append((num, den))
    return checked


def _xpoly_to_sympy(table, x):
    import sympy
    return sympy.Poly.from_dict(
        {(i,): sympy.Rational(int(c.numerator), int(c.denominator))
         for i, c in table.items()}, x)


def _gcd_reduce_xden(num, den):
    """Cancel the common Q[x] factor of an x-only-denominator expression."""
    import sympy
    x = sympy.Symbol("x")
    polys = [_xpoly_to_sympy(den.terms_x(), x)]
    for j in range(num.deg_y + 1):
        row = num.x_coefficients(j)
        if row:
            polys.append(_xpoly_to_sympy(row, x))
    g = polys[0]
    for ppoly in polys[1:]:
        g = sympy.gcd(g, ppoly)
        if g.total_degree() == 0:
            return num, den
    def divided(table):
        poly = _xpoly_to_sympy(table, x)
        q = sympy.div(poly, g, x)[0]
        return {i[0] if isinstance(i, tuple) else i: mpq(str(c))
                for i, c in q.as_dict().items()}
    new_den = BiPoly({(i, 0): c for i, c in divided(den.terms_x()).items()})
    new_num_terms = {}
    for j in range(num.deg_y + 1):
        row = num.x_coefficients(j)
        if row:
            for i, c in divided(row).items():
                new_num_terms[(i, j)] = c
    return BiPoly(new_num_terms), new_den


def _same_function(pairs, X, Y):
    """True if all verified (num, den) pairs define one rational function."""
    n0, d0 = pairs[0]
    s_n0 = n0.eval_series(X, Y)
    s_d0 = d0.eval_series(X, Y)
    for n1, d1 in pairs[1:]:
        if not (s_n0 * d1.eval_series(X, Y) - n1.eval_series(X, Y) * s_d0).is_zero:
            return False
    return True


def _shared_ladder(shared, X, Y, window, p0=None):
    """Ladder for (X, Y) on a window, reused across calls when possible."""
    if shared is not None and ("ladder", window) in shared:
        return shared[("ladder", window)]
    p = p0 or _PREFILTER_PRIME
    while True:
        try:
            lad = _ModLadder(X, Y, window, p)
            break
        except _BadPrime:
            p = int(next_prime(p))
    if shared is not None:
        shared[("ladder", window)] = lad
    return lad


def express_in_generators(target, X, Y, relation, deg_num, deg_den,
                          margin=DEFAULT_MARGIN, budget=None, shared=None):
    """Write target as P(X, Y) / D on the curve cut out by the relation.

    Both P and D keep y-degree below deg_y(relation) (the coordinate ring
    is a free module of that rank over the x-line).  Denominators in x
    alone are preferred: one generous solve finds the whole x-only
    solution family, whose gcd-reduction is the unique minimal expression
    (this is the shape of the printed level-11 maps).  Only when no x-only
    denominator exists within the degree bounds does the search widen to
    mixed denominators, by increasing degree sum, smallest first.
    """
    r = relation.deg_y
    if r < 1:
        raise ValueError("relation must involve y")
    if target.is_zero:
        return RationalExpr(BiPoly({}), BiPoly({(0, 0): mpq(1)}))
    if shared is not None:
        monos_cache = shared.setdefault("monos", _SeriesMonomials(X, Y))
    else:
        monos_cache = _SeriesMonomials(X, Y)
    avail = min(X.trunc - X.val, Y.trunc - Y.val, target.trunc - target.val)

    # Phase A: x-only denominator at the full degree bounds
    dn, dd = deg_num, deg_den
    def unknowns(dn, dd):
        return len(_monomials_upto(dn, ymax=r - 1)) + dd + 1
    if budget is not None:
        while (dn > 0 or dd > 0) and unknowns(dn, dd) > budget:
            if dn >= dd:
                dn -= 1
            else:
                dd -= 1
    num_monos = _monomials_upto(dn, ymax=r - 1)
    den_monos = [(i, 0) for i in range(dd + 1)]
    U = len(num_monos) + len(den_monos)
    window = min(2 * (U + margin) + 2, avail)
    if window >= U + margin:
        ladder = _shared_ladder(shared, X, Y, window)
        while True:
            try:
                tres = _reduce_series_mod(target, window, ladder.p)
                break
            except _BadPrime:
                # target denominator divisible by the ladder prime
                ladder = _shared_ladder(None, X, Y, window,
                                        p0=int(next_prime(ladder.p)))
        if _express_prefilter(ladder, tres, target.val, num_monos, den_monos,
                              margin) > 0:
            checked = _exact_express_solve(target, X, Y, num_monos, den_monos,
                                           margin, monos_cache)
            if checked:
                reduced = [_gcd_reduce_xden(n, d) for n, d in checked]
                exprs = {RationalExpr(n, d) for n, d in reduced}
                if len(exprs) > 1 and not _same_function(
                        [(e.num, e.den) for e in exprs],
                        monos_cache._truncated(X), monos_cache._truncated(Y)):
                    raise AmbiguousExpression(
                        "x-only solution family holds more than one function")
                return sorted(exprs, key=lambda e: sorted(e.den.terms.items()))[0]

    # Phase B: mixed denominators, minimal degree sum first
    pairs = sorted(((a, b) for a in range(deg_num + 1)
                    for b in range(deg_den + 1)),
                   key=lambda t: (t[0] + t[1], t[0]))
    skipped_dim = None
    ladder = None
    for a, b in pairs:
        num_monos = _monomials_upto(a, ymax=r - 1)
        den_monos = _monomials_upto(b, ymax=r - 1)
        U = len(num_monos) + len(den_monos)
        if budget is not None and U > budget:
            if skipped_dim is None or U < skipped_dim:
                skipped_dim = U
            continue
        window = min(2 * (U + margin) + 2, avail)
        if window < U + margin:
            raise InsufficientOrder(
                f"need {U + margin} coefficients at degrees ({a},{b}), "
                f"have {window}")
        if ladder is None or ladder.window < window:
            lad_window = min(2 * (budget or U) + 2 * margin + 2, avail,
                             4 * window)
            ladder = _shared_ladder(shared, X, Y, lad_window)
            while True:
                try:
                    tres = _reduce_series_mod(target, ladder.window, ladder.p)
                    break
                except _BadPrime:
                    # target denominator divisible by the ladder prime
                    ladder = _shared_ladder(None, X, Y, lad_window,
                                            p0=int(next_prime(ladder.p)))
        if _express_prefilter(ladder, tres, target.val, num_monos, den_monos,
                              margin) == 0:
            continue
        checked = _exact_express_solve(target, X, Y, num_monos, den_monos,
                                       margin, monos_cache)
        if not checked:
            continue
        if len(checked) > 1 and not _same_function(
                checked, monos_cache._truncated(X), monos_cache._truncated(Y)):
            raise AmbiguousExpression(
                f"solution space at degrees ({a},{b}) holds more than one function")
        num, den = checked[0]
        return RationalExpr(num, den)
    if skipped_dim is not None:
        raise BudgetExceeded(
            f"expression search needs {skipped_dim} unknowns, "
            f"over the matrix budget {budget}",
            dimension=skipped_dim, budget=budget)
    raise NoExpressionFound(
        f"target not expressible with degrees up to ({deg_num},{deg_den})")


# ---------------------------------------------------------------------------
# generator bootstrap
# ---------------------------------------------------------------------------

def _monomial_pool(weighted_gens, W, trunc):
    """All products of the weighted generator series with total weight <= W."""
    items = [(0, QSeries.one(trunc))]
    for s, w in weighted_gens:
        grown = []
        for wt, cur in items:
            t, p = wt, cur
            while True:
                grown.append((t, p))
                t += w
                if t > W:
                    break
                p = p * s
        items = grown
    return [p for _, p in items]


def _valuation_echelon(series_list, T):
    """Triangularize a span of power series by leading exponent.

    Returns {valuation: series}; reduction uses the first series achieving
    each valuation, so the result is deterministic.
    """
    basis = {}
    for s in series_list:
        s = s.truncate(T)
        while not s.is_zero:
            v = s.val
            pivot = basis.get(v)
            if pivot is None:
                basis[v] = s
                break
            s = s - pivot.scale(s.coefficient(v) / pivot.coefficient(v))
    return basis


def bootstrap_generator(partial, X, Y, relation, bounds=None, aux=()):
    """Re-expand a partially known modular function to full order.

    X, Y are the in-house generators known to high order; aux may supply
    further modular functions with the same pole support (weight-tagged,
    like the primed generator pair).  The method builds the span of
    monomial products of the generators, locates by pure linear algebra a
    combination h whose zeros all sit at q = 0 (its leading exponent
    equals the dimension of the valuation filtration), and then solves
    partial * h = g with g constrained to the high-valuation part of the
    span.  The system is overdetermined by the known coefficients of
    partial and the solution is required to be unique; the quotient g/h
    then re-expands partial to the full order of the generators.
    """
    if relation is not None and not relation.eval_series(
            X.truncate(X.val + 40), Y.truncate(Y.val + 40)).is_zero:
        raise ValueError("relation does not annihilate the generator pair")
    max_W, max_extra = bounds if bounds is not None else (12, 4)
    weighted = [(X, 2), (Y, 3)] + list(aux)
    trunc = min(s.trunc for s, _ in weighted)
    v = max(0, -partial.val)
    known = partial.trunc - partial.val
    T = trunc - max(w for _, w in weighted)
    saw_inconsistent = False
    for W in range(1, max_W + 1):
        base = _valuation_echelon(_monomial_pool(weighted, W, trunc), T)
        if not base:
            continue
        vmax = max(base)
        if vmax < 1 or vmax != len(base):
            continue  # every combination has zeros away from q = 0
        h = base[vmax]
        for extra in range(0, max_extra + 1):
            if extra == 0:
                span = base
            else:
                span = _valuation_echelon(
                    _monomial_pool(weighted, W + extra, trunc), T)
            gs = [span[k] for k in sorted(span) if k >= vmax - v]
            if not gs:
                continue
            G = partial * h
            neqs = G.trunc - G.val
            if neqs < len(gs) + 1:
                continue
            rows = [[g.coefficient(e) for g in gs] + [-G.coefficient(e)]
                    for e in range(G.val, G.trunc)]
            basis = solve_nullspace(rows)
            sols = [vec for vec in basis if vec[-1] != 0]
            if not sols:
                if not basis:
                    saw_inconsistent = True
                continue
            if len(basis) > 1:
                continue  # solution not unique at this size; widen search
            vec = sols[0]
            num = QSeries.zero(T)
            for c, g in zip(vec[:-1], gs):
                if c:
                    num = num + g.scale(c / vec[-1])
            result = num / h
            ok = all(result.coefficient(e) == partial.coefficient(e)
                     for e in range(partial.val, partial.trunc))
            if ok:
                return result
            saw_inconsistent = True
    if saw_inconsistent:
        raise InconsistentPartial(
            "known coefficients admit no completion in the searched spaces")
    raise NoExpressionFound(
        f"no candidate space matched the partial series (weight <= {max_W})")
