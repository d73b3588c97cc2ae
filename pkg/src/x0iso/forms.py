"""Exact q-expansions of the modular forms and functions the pipeline needs.

Everything is generated from the classical closed q-series: the normalized
weight-k Eisenstein series E_k, the weight-2 level-N combination with
constant term (N-1)/24, the discriminant form, and the four invariant
functions a4, a6, a4', a6' that generate the function field of X0(N).
"""

from dataclasses import dataclass
from functools import lru_cache
from threading import Lock

from gmpy2 import mpq, mpz, bincoef

from .series import QSeries

_sigma_lock = Lock()
_sigma_cache = {}  # (k-1 power) -> list of sigma values, 1-indexed


@lru_cache(maxsize=None)
def bernoulli(k):
    """k-th Bernoulli number, k even >= 2, by the defining recurrence."""
    if k < 2 or k % 2:
        raise ValueError("k must be an even integer >= 2")
    bs = _bernoulli_upto(k)
    return bs[k]


@lru_cache(maxsize=None)
def _bernoulli_upto(k):
    # sum_{j=0}^{m} C(m+1, j) B_j = 0  for m >= 1, with B_1 = -1/2
    bs = [mpq(1)]
    for m in range(1, k + 1):
        s = mpq(0)
        for j in range(m):
            s += bincoef(m + 1, j) * bs[j]
        bs.append(-s / (m + 1))
    return bs


def sigma(k, n):
    """Divisor power sum sigma_k(n): sum of d^k over divisors d of n."""
    if k < 1 or n < 1:
        raise ValueError("sigma requires k >= 1 and n >= 1")
    return sigma_table(k + 1, n + 1)[n]


def sigma_table(k, M):
    """sigma_{k-1}(n) for n = 1..M-1 via a sieve; entry 0 is unused.

    Sieved once per (k, max order) and cached; the cache only ever grows.
    """
    power = k - 1
    with _sigma_lock:
        cached = _sigma_cache.get(power)
        if cached is not None and len(cached) >= M:
            return cached[:M]
        table = [mpz(0)] * max(M, 2)
        for d in range(1, len(table)):
            dk = mpz(d) ** power
            for m in range(d, len(table), d):
                table[m] += dk
        _sigma_cache[power] = table
        return table[:M]


def eisenstein(k, M):
    """Normalized weight-k Eisenstein series to O(q^M)."""
    if k < 4 or k % 2:
        raise ValueError("k must be an even integer >= 4")
    if M < 1:
        raise ValueError("order must be >= 1")
    factor = -mpq(2 * k) / bernoulli(k)
    sig = sigma_table(k, M)
    coeffs = [mpq(1)] + [factor * sig[n] for n in range(1, M)]
    return QSeries.make(0, coeffs, M)


def e2N(N, M):
    """Weight-2 level-N Eisenstein series: (N-1)/24 + sum sigma_1(n)(q^n - N q^(Nn))."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if M < 1:
        raise ValueError("order must be >= 1")
    sig = sigma_table(2, M)
    coeffs = [mpq(N - 1, 24)]
    for n in range(1, M):
        c = mpq(sig[n])
        if n % N == 0:
            c -= N * sig[n // N]
        coeffs.append(c)
    return QSeries.make(0, coeffs, M)


def delta(M):
    """Discriminant form (E4^3 - E6^2)/1728 to O(q^M)."""
    e4 = eisenstein(4, M)
    e6 = eisenstein(6, M)
    return (e4 ** 3 - e6 ** 2).truncate(M) / 1728


@dataclass(frozen=True)
class InvariantQuadruple:
    """The four function-field generators of level N, all to order M."""
    level: int
    a4: QSeries
    a6: QSeries
    a4p: QSeries
    a6p: QSeries

    @property
    def order(self):
        return self.a4.trunc


def invariant_quadruple(N, M):
    """a4 = -E4/(48 L^2), a6 = E6/(864 L^3) with L = E2N, plus the tau -> N*tau pair."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if M < 1:
        raise ValueError("order must be >= 1")
    e4 = eisenstein(4, M)
    e6 = eisenstein(6, M)
    inv_l = e2N(N, M).invert()
    inv2 = inv_l * inv_l
    inv3 = inv2 * inv_l
    # E_k(N*tau) realized as q -> q^N; only ceil(M/N) terms are needed
    m_sub = -(-M // N) + 1
    e4n = eisenstein(4, m_sub).substitute_qN(N).truncate(M)
    e6n = eisenstein(6, m_sub).substitute_qN(N).truncate(M)
    a4 = (-e4 * inv2 / 48).truncate(M)
    a6 = (e6 * inv3 / 864).truncate(M)
    a4p = (-e4n * inv2 / 48).truncate(M)
    a6p = (e6n * inv3 / 864).truncate(M)
    return InvariantQuadruple(N, a4, a6, a4p, a6p)
