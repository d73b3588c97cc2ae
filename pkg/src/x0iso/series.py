"""Truncated Laurent series in q with exact rational coefficients.

A QSeries knows its coefficients for exponents valuation..trunc-1 and
nothing beyond; every operation propagates the tightest correct trunc.
Coefficients are gmpy2.mpq throughout -- no floating point here.
"""

from gmpy2 import mpq, mpz, lcm

from .errors import PrecisionExceeded, ZeroLeadingCoefficient

Q = mpq


def qq(value, den=None):
    """Coerce ints, 'p/q' strings or pairs to an exact rational."""
    if den is not None:
        return mpq(value, den)
    if isinstance(value, str):
        return mpq(value.strip())
    return mpq(value)


def _scale_to_int(coeffs):
    """Return (integer list, common denominator) for a list of mpq."""
    d = mpz(1)
    for c in coeffs:
        d = lcm(d, c.denominator)
    return [mpz(c * d) for c in coeffs], d


def _conv(a, b, n):
    """First n coefficients of the product of two mpq coefficient lists."""
    if n <= 0 or not a or not b:
        return []
    ai, da = _scale_to_int(a)
    bi, db = _scale_to_int(b)
    out = [mpz(0)] * n
    for i, x in enumerate(ai):
        if i >= n or not x:
            continue
        jmax = min(len(bi), n - i)
        for j in range(jmax):
            out[i + j] += x * bi[j]
    d = da * db
    return [mpq(x, d) for x in out]


def _inv_ps(h, n):
    """Invert a power series given as mpq list with h[0] != 0, to n terms.

    Newton iteration; cost is a constant few full multiplications.
    """
    u = [1 / h[0]]
    k = 1
    while k < n:
        k = min(2 * k, n)
        hu = _conv(h[:k], u, k)
        e = [-x for x in hu]
        e[0] += 2
        u = _conv(u, e, k)
    return u


class QSeries:
    """Immutable truncated Laurent series over exact rationals."""

    __slots__ = ("val", "trunc", "coeffs")

    def __init__(self, val, coeffs, trunc):
        # normalize: coerce, strip leading/trailing zeros
        cs = [mpq(c) for c in coeffs]
        while cs and cs[0] == 0:
            cs.pop(0)
            val += 1
        while cs and cs[-1] == 0:
            cs.pop()
        if cs and val + len(cs) > trunc:
            raise ValueError("coefficients extend beyond trunc")
        if not cs:
            val = trunc  # zero placeholder: nothing known to be nonzero
        object.__setattr__(self, "val", val)
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "trunc", trunc)

    def __setattr__(self, *a):
        raise AttributeError("QSeries is immutable")

    # --- constructors ---

    @staticmethod
    def make(val, coeffs, trunc=None):
        coeffs = list(coeffs)
        if trunc is None:
            trunc = val + len(coeffs)
        return QSeries(val, coeffs, trunc)

    @staticmethod
    def zero(trunc):
        return QSeries(trunc, [], trunc)

    @staticmethod
    def one(trunc):
        return QSeries(0, [mpq(1)], trunc)

    @staticmethod
    def monomial(c, e, trunc):
        return QSeries(e, [mpq(c)], trunc)

    # --- inspection ---

    @property
    def is_zero(self):
        return not self.coeffs

    def coefficient(self, n):
        if n >= self.trunc:
            raise PrecisionExceeded(
                f"coefficient of q^{n} requested but series known only to O(q^{self.trunc})")
        if n < self.val or n - self.val >= len(self.coeffs):
            return mpq(0)
        return self.coeffs[n - self.val]

    def window_coeffs(self, lo, hi):
        """Exact coefficients for exponents lo..hi-1 (hi must be <= trunc)."""
        if hi > self.trunc:
            raise PrecisionExceeded(
                f"window [{lo},{hi}) exceeds trunc {self.trunc}")
        return [self.coefficient(n) for n in range(lo, hi)]

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        return (self.val == other.val and self.trunc == other.trunc
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.val, self.trunc, self.coeffs))

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs[:6]):
            if c:
                terms.append(f"({c})q^{self.val + i}")
        body = " + ".join(terms) if terms else "0"
        if len(self.coeffs) > 6:
            body += " + ..."
        return f"<QSeries {body} + O(q^{self.trunc})>"

    # --- ring operations ---

    def __add__(self, other):
        if not isinstance(other, QSeries):
            other = QSeries.monomial(other, 0, self.trunc)
        trunc = min(self.trunc, other.trunc)
        if self.is_zero and other.is_zero:
            return QSeries.zero(trunc)
        lo = min(self.val if self.coeffs else trunc,
                 other.val if other.coeffs else trunc)
        if lo >= trunc:
            return QSeries.zero(trunc)
        cs = [self.coefficient(n) + other.coefficient(n) for n in range(lo, trunc)]
        return QSeries(lo, cs, trunc)

    __radd__ = __add__

    def __neg__(self):
        return QSeries(self.val, [-c for c in self.coeffs], self.trunc)

    def __sub__(self, other):
        if not isinstance(other, QSeries):
            other = QSeries.monomial(other, 0, self.trunc)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = mpq(c)
        if c == 0:
            return QSeries.zero(self.trunc)
        return QSeries(self.val, [c * x for x in self.coeffs], self.trunc)

    def __mul__(self, other):
        if not isinstance(other, QSeries):
            return self.scale(other)
        trunc = min(self.trunc + other.val, other.trunc + self.val)
        if self.is_zero or other.is_zero:
            return QSeries.zero(trunc)
        lo = self.val + other.val
        n = trunc - lo
        cs = _conv(list(self.coeffs), list(other.coeffs), n)
        return QSeries(lo, cs, trunc)

    __rmul__ = __mul__

    def invert(self):
        if self.is_zero:
            raise ZeroLeadingCoefficient("cannot invert a series that is zero on its window")
        v, c = self.val, self.coeffs[0]
        n = self.trunc - v
        h = [x / c for x in self.coeffs]
        h += [mpq(0)] * (n - len(h))
        u = _inv_ps(h, n)
        return QSeries(-v, [x / c for x in u], -v + n)

    def __truediv__(self, other):
        if not isinstance(other, QSeries):
            return self.scale(1 / mpq(other))
        return self * other.invert()

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("exponent must be an integer")
        if k < 0:
            return self.invert() ** (-k)
        result = QSeries.one(self.trunc - self.val)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def substitute_qN(self, N):
        """q -> q^N on the expansion (tau -> N*tau on modular objects)."""
        if N < 1:
            raise ValueError("N must be >= 1")
        if N == 1:
            return self
        if self.is_zero:
            return QSeries.zero(N * self.trunc)
        cs = [mpq(0)] * (N * (len(self.coeffs) - 1) + 1)
        for i, c in enumerate(self.coeffs):
            cs[N * i] = c
        return QSeries(N * self.val, cs, N * self.trunc)

    def truncate(self, m):
        trunc = min(self.trunc, m)
        if self.is_zero or self.val >= trunc:
            return QSeries.zero(trunc)
        return QSeries(self.val, list(self.coeffs[:trunc - self.val]), trunc)

    # --- text format ---

    def to_text(self):
        """Serialize in the q-series file format."""
        lines = [f"qseries v={self.val} M={self.trunc}"]
        for i, c in enumerate(self.coeffs):
            if c:
                lines.append(f"{self.val + i} {c}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text):
        header = None
        entries = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                parts = line.split()
                if len(parts) != 3 or parts[0] != "qseries":
                    raise ValueError(f"bad q-series header: {line!r}")
                kv = dict(p.split("=", 1) for p in parts[1:])
                header = (int(kv["v"]), int(kv["M"]))
                continue
            e_str, c_str = line.split(None, 1)
            entries.append((int(e_str), mpq(c_str)))
        if header is None:
            raise ValueError("empty q-series file")
        val, trunc = header
        for i in range(1, len(entries)):
            if entries[i][0] <= entries[i - 1][0]:
                raise ValueError("exponents must be strictly increasing")
        if entries and (entries[0][0] < val or entries[-1][0] >= trunc):
            raise ValueError("exponent outside declared window")
        cs = [mpq(0)] * (entries[-1][0] - val + 1 if entries else 0)
        for e, c in entries:
            cs[e - val] = c
        return QSeries(val, cs, trunc)


def eq_on_common_window(f, g):
    """Coefficient-wise equality on the intersection of the known windows."""
    m = min(f.trunc, g.trunc)
    return f.truncate(m) == g.truncate(m)
