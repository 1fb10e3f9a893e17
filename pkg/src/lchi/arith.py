"""Integer arithmetic: primes, primitive roots, index tables, von Mangoldt.

All tables are plain numpy arrays and read-only after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fft import prime_factors


def sieve_primes(limit: int) -> np.ndarray:
    """Primes ``p <= limit`` in ascending order (empty for ``limit < 2``)."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for i in range(3, math.isqrt(limit) + 1, 2):
        if is_p[i]:
            is_p[i * i :: 2 * i] = False
    return np.flatnonzero(is_p).astype(np.int64)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _check_odd_prime(q: int) -> int:
    q = int(q)
    if q < 3 or not is_prime(q):
        raise ValueError(f"q must be an odd prime, got {q}")
    return q


def primitive_roots(q: int, count: int = 1) -> list[int]:
    """The ``count`` smallest primitive roots modulo the odd prime ``q``."""
    q = _check_odd_prime(q)
    n = q - 1
    cofactors = [n // p for p in sorted(set(prime_factors(n)))]
    roots = []
    for g in range(2, q):
        if all(pow(g, e, q) != 1 for e in cofactors):
            roots.append(g)
            if len(roots) == count:
                break
    return roots


def primitive_root(q: int) -> int:
    """Smallest primitive root modulo the odd prime ``q``."""
    return primitive_roots(q, 1)[0]


@dataclass(frozen=True)
class CharacterTable:
    """Index tables for ``(Z/qZ)^*`` generated by ``g``.

    ``pow[k] = g**k mod q`` and ``dlog[a-1] = k`` with ``g**k = a``.  The
    character with index ``j`` is ``chi_j(g**k) = exp(2 pi i jk/(q-1))``.
    """

    q: int
    g: int
    pow: np.ndarray
    dlog: np.ndarray

    @property
    def n(self) -> int:
        return self.q - 1


def build_character_table(q: int, g: int | None = None) -> CharacterTable:
    """Power and discrete-log tables for ``q`` (smallest root unless given)."""
    q = _check_odd_prime(q)
    if g is None:
        g = primitive_root(q)
    n = q - 1
    # blocked powers keep the Python loop at O(sqrt n); products < 2**63
    B = max(1, math.isqrt(n))
    small = np.empty(B, dtype=np.int64)
    v = 1
    for r in range(B):
        small[r] = v
        v = v * g % q
    gB = v
    nblocks = -(-n // B)
    pw = np.empty(nblocks * B, dtype=np.int64)
    base = 1
    for i in range(nblocks):
        pw[i * B : (i + 1) * B] = (small * base) % q
        base = base * gB % q
    pw = pw[:n]
    dlog = np.empty(n, dtype=np.int64)
    dlog[pw - 1] = np.arange(n, dtype=np.int64)
    if pw[n // 2] != q - 1 or len(np.unique(pw)) != n:
        raise ValueError(f"{g} is not a primitive root mod {q}")
    pw.setflags(write=False)
    dlog.setflags(write=False)
    return CharacterTable(q=q, g=int(g), pow=pw, dlog=dlog)


@dataclass
class LambdaTable:
    """``lam[n] = Lambda(n)`` for ``0 <= n <= N`` (``lam[0] = 0``).

    Convolution powers requested through :func:`lambda_k` are memoised in
    ``powers``.
    """

    N: int
    lam: np.ndarray
    powers: dict = field(default_factory=dict, repr=False)

    def support(self) -> np.ndarray:
        """Prime powers ``n <= N``."""
        return np.flatnonzero(self.lam)


def von_mangoldt_table(N: int) -> LambdaTable:
    if N < 1:
        raise ValueError("N must be >= 1")
    lam = np.zeros(N + 1, dtype=np.float64)
    primes = sieve_primes(N)
    lam[primes] = np.log(primes.astype(np.float64))
    for p in primes[: np.searchsorted(primes, math.isqrt(N), side="right")].tolist():
        lp = math.log(p)
        pk = p * p
        while pk <= N:
            lam[pk] = lp
            pk *= p
    lam.setflags(write=False)
    return LambdaTable(N=N, lam=lam, powers={1: lam})


def dirichlet_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(a*b)(n) = sum_{de=n} a(d) b(e)`` for ``n <= len-1`` (index 0 unused)."""
    N = len(a) - 1
    out = np.zeros(N + 1, dtype=np.float64)
    b_nz = np.flatnonzero(b)
    if b_nz.size == 0:
        return out
    bmin = int(b_nz[0])
    for d in np.flatnonzero(a).tolist():
        cnt = N // d
        if cnt < bmin:
            break
        out[d : d * cnt + 1 : d] += a[d] * b[1 : cnt + 1]
    return out


def lambda_k(table: LambdaTable, k: int) -> np.ndarray:
    """``Lambda_k`` on ``0..N`` by repeated Dirichlet convolution with Lambda."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k in table.powers:
        return table.powers[k]
    prev = lambda_k(table, k - 1)
    out = dirichlet_convolve(table.lam, prev)
    out.setflags(write=False)
    table.powers[k] = out
    return out
