"""Constants, log-Gamma at rational points and Deninger's S(x) series.

``S(x) = 2 g1 x + log(x)^2 + sum_{m>=1} [log(x+m)^2 - log(m)^2 - 2x log(m)/m]``
with ``g1 = lim (sum_{j<=N} log j/j - log(N)^2/2)``.  The series is summed
directly up to ``M-1`` and the remainder is replaced by its Euler-Maclaurin
expansion at ``M`` with ``p`` Bernoulli corrections; ``(M, p)`` are picked
from a rigorous remainder bound so that the truncation error is below the
requested tolerance.

Everything here is written against :class:`lchi.precision.Backend`, so the
same code produces longdouble tables or mpmath tables.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .arith import _check_odd_prime
from .precision import Precision, PrecisionError

CONST_BITS = 256

DEFAULT_TOL = {Precision.EXTENDED64: 2e-16, Precision.QUAD113: 1e-33}
# share of the S tolerance given to Euler-Maclaurin truncation; the rest
# absorbs rounding, and a tight share keeps results near S(1) = 0 accurate
TRUNC_SHARE = 1 / 32


# ---------------------------------------------------------------------------
# Euler-Maclaurin helpers


@lru_cache(maxsize=None)
def _bern_over_fact(k: int) -> mpmath.mpf:
    """``B_{2k}/(2k)!`` as an exact-ish mpf at CONST_BITS."""
    p, q = mpmath.bernfrac(2 * k)
    with mpmath.workprec(CONST_BITS):
        return mpmath.mpf(p) / q / mpmath.factorial(2 * k)


@lru_cache(maxsize=None)
def _harmonic(n: int) -> mpmath.mpf:
    with mpmath.workprec(CONST_BITS):
        return mpmath.fsum(mpmath.mpf(1) / i for i in range(1, n + 1))


def _log_deriv_term(n: int, u, log_u, inv_pow, be=None):
    """n-th derivative of ``log(u)/u``: ``(-1)^n n! (log u - H_n)/u^{n+1}``.

    ``inv_pow`` must be ``u**-(n+1)``; ``be`` converts ``H_n`` to the
    backend's scalar type (mpf is used when omitted).
    """
    c = math.factorial(n) * (-1) ** n
    h = _harmonic(n) if be is None else be.const(_harmonic(n))
    return c * (log_u - h) * inv_pow


# ---------------------------------------------------------------------------
# Constants


@lru_cache(maxsize=None)
def euler_gamma() -> mpmath.mpf:
    """Euler-Mascheroni constant from Euler-Maclaurin on ``H_N - log N``."""
    N, p = 64, 45
    with mpmath.workprec(CONST_BITS + 20):
        H = mpmath.fsum(mpmath.mpf(1) / j for j in range(1, N + 1))
        g = H - mpmath.log(N) - mpmath.mpf(1) / (2 * N)
        for k in range(1, p + 1):
            bk = mpmath.bernoulli(2 * k)
            g += bk / (2 * k * mpmath.mpf(N) ** (2 * k))
        return +g


@lru_cache(maxsize=None)
def gamma1() -> mpmath.mpf:
    """``lim_N (sum_{j<=N} log j/j - log(N)^2/2)`` via Euler-Maclaurin."""
    N, p = 64, 45
    with mpmath.workprec(CONST_BITS + 20):
        logN = mpmath.log(N)
        s = mpmath.fsum(mpmath.log(j) / j for j in range(2, N + 1))
        val = s - logN**2 / 2 - logN / N / 2
        invN = mpmath.mpf(1) / N
        for k in range(1, p + 1):
            n = 2 * k - 1
            val -= _bern_over_fact(k) * _log_deriv_term(n, N, logN, invN ** (n + 1))
        return +val


def zeta_dd0_formula() -> mpmath.mpf:
    """``(-(log 2pi)^2 - pi^2/12 + 2 g1 + gamma^2)/2``."""
    with mpmath.workprec(CONST_BITS):
        l2p = mpmath.log(2 * mpmath.pi)
        return (-(l2p**2) - mpmath.pi**2 / 12 + 2 * gamma1() + euler_gamma() ** 2) / 2


@lru_cache(maxsize=None)
def zeta_dd0() -> mpmath.mpf:
    """``zeta''(0)``, cross-checked against a direct Hurwitz-zeta evaluation.

    Raises :class:`PrecisionError` if the closed form and the direct value
    disagree by more than 1e-6.
    """
    val = zeta_dd0_formula()
    with mpmath.workprec(CONST_BITS):
        direct = mpmath.zeta(0, 1, 2)
    if abs(val - direct) > 1e-6:
        raise PrecisionError(
            f"zeta''(0) mismatch: closed form {mpmath.nstr(val, 15)} "
            f"vs direct {mpmath.nstr(direct, 15)}"
        )
    return val


@dataclass(frozen=True)
class Constants:
    gamma: object
    gamma1: object
    zeta_dd0: object
    log2pi: object


@lru_cache(maxsize=None)
def constants(precision: Precision = Precision.EXTENDED64) -> Constants:
    """Constants as backend scalars of the given precision."""
    be = precision.backend
    with mpmath.workprec(CONST_BITS):
        l2p = mpmath.log(2 * mpmath.pi)
    with be.context():
        return Constants(
            gamma=be.const(euler_gamma()),
            gamma1=be.const(gamma1()),
            zeta_dd0=be.const(zeta_dd0()),
            log2pi=be.const(l2p),
        )


# ---------------------------------------------------------------------------
# log Gamma


@lru_cache(maxsize=None)
def _stirling_plan(precision: Precision) -> tuple[int, int]:
    """Shift K and number of Stirling terms N for ``x in (0, 1)``."""
    target = mpmath.mpf(precision.eps) / 64
    K = 8
    while True:
        z = mpmath.mpf(K)
        for N in range(1, 80):
            b = abs(mpmath.bernoulli(2 * N + 2)) / ((2 * N + 2) * (2 * N + 1) * z ** (2 * N + 1))
            if b < target:
                return K, N
        K += 2


def log_gamma(x, precision: Precision = Precision.EXTENDED64):
    """``log Gamma(x)`` for ``0 < x < 1`` (scalar or array).

    Extended precision sums the Taylor series about 1; quad uses the
    Stirling series after shifting the argument by ``K`` so that the
    first omitted term is below the working epsilon.
    """
    precision = Precision.parse(precision)
    be = precision.backend
    scalar = np.ndim(x) == 0
    with be.context():
        xs = be.real(np.atleast_1d(x) if not scalar else np.array([x], dtype=object if be.is_mp else None))
        if be.is_mp:
            bad = any(not (0 < v < 1) for v in xs)
        else:
            bad = bool(np.any((xs <= 0) | (xs >= 1)))
        if bad:
            raise ValueError("log_gamma argument must lie in (0, 1)")
        out = _log_gamma_array(xs, precision)
    return out[0] if scalar else out


TAYLOR_TERMS = 40


@lru_cache(maxsize=None)
def _taylor_coefs() -> tuple:
    """``(-1)^k (zeta(k) - 1) / k`` for ``k = TAYLOR_TERMS..2`` (Horner order)."""
    be = Precision.EXTENDED64.backend
    with mpmath.workprec(CONST_BITS):
        one_minus_gamma = be.const(1 - mpmath.euler)
        c = [be.const((-1) ** k * (mpmath.zeta(k) - 1) / k) for k in range(TAYLOR_TERMS, 1, -1)]
    return one_minus_gamma, tuple(c)


def _log_gamma_taylor(x):
    """Extended-precision ``log Gamma(x)`` on ``(0, 1)`` with all terms O(1).

    ``log Gamma(1+t) = -log(1+t) + (1-gamma) t + sum_k (-1)^k (zeta(k)-1) t^k/k``
    with ``t = x`` (then subtract ``log x``) or ``t = x - 1``, so ``|t| <= 1/2``
    and the series converges like ``4^-k``.
    """
    small = x <= 0.5
    t = np.where(small, x, x - 1)
    one_minus_gamma, coefs = _taylor_coefs()
    acc = np.zeros_like(t)
    for c in coefs:
        acc = (acc + c) * t
    acc = acc * t
    out = acc + one_minus_gamma * t - np.log1p(t)
    out[small] -= np.log(x[small])
    return out


def _log_gamma_array(x, precision: Precision):
    be = precision.backend
    if not be.is_mp:
        return _log_gamma_taylor(x)
    K, N = _stirling_plan(precision)
    with mpmath.workprec(CONST_BITS):
        half_log2pi = be.const(mpmath.log(2 * mpmath.pi) / 2)
        coefs = []
        for k in range(1, N + 1):
            p, q = mpmath.bernfrac(2 * k)
            coefs.append(be.const(mpmath.mpf(p) / (q * 2 * k * (2 * k - 1))))
    prod = x.copy()
    for i in range(1, K):
        prod = prod * (x + i)
    z = x + K
    logz = be.log(z)
    inv = 1 / z
    inv2 = inv * inv
    series = 0 * z
    pw = inv
    for coef in coefs:
        series = series + pw * coef
        pw = pw * inv2
    return (z - be.const(0.5)) * logz - z + series + half_log2pi - be.log(prod)


# ---------------------------------------------------------------------------
# Deninger S(x)


def _em_remainder_bound(M: int, p: int) -> mpmath.mpf:
    """Bound on the Euler-Maclaurin remainder of the S-series tail at ``x=1``.

    The bound scales as ``x**2``; see module notes for the derivation
    (``|f^(2p)(t)| <= x^2 (2p+1)! (log(t+1) + H_{2p+1}) / t^(2p+2)``).
    """
    with mpmath.workprec(80):
        a = 2 * p + 1
        Mf = mpmath.mpf(M)
        integral = (mpmath.log(Mf) + _harmonic(a)) / (a * Mf**a) + 1 / (a * a * Mf**a) + 1 / ((a + 1) * Mf ** (a + 1))
        coef = 2 * mpmath.zeta(2 * p) / (2 * mpmath.pi) ** (2 * p)
        return coef * mpmath.factorial(a) * integral


@lru_cache(maxsize=None)
def em_plan(tol: float) -> tuple[int, int, float]:
    """Cheapest ``(M, p)`` whose remainder bound is ``<= tol``; returns the bound too."""
    best = None
    for M in range(4, 400):
        for p in range(1, 80):
            b = _em_remainder_bound(M, p)
            if b <= tol:
                cost = 3 * M + p
                if best is None or cost < best[0]:
                    best = (cost, M, p, float(b))
                break
        if best is not None and 3 * M > best[0]:
            break
    if best is None:
        raise PrecisionError(f"no Euler-Maclaurin plan reaches tol={tol:g}")
    return best[1], best[2], best[3]


def _rounding_floor(x_log_sq, M: int, p: int, precision: Precision):
    return precision.eps * (4 * x_log_sq + 8 * (M + 2 * p) + 4)


def _deninger_S_array(x, M: int, p: int, precision: Precision):
    be = precision.backend
    c = constants(precision)
    with mpmath.workprec(CONST_BITS):
        lM = be.const(mpmath.log(M))
        inv_M = be.const(mpmath.mpf(1) / M)
        log_m = [be.const(mpmath.log(m)) for m in range(2, M)]
        bcoef = [be.const(_bern_over_fact(k)) for k in range(1, p + 1)]
    lx = be.log(x)
    total = x * (2 * c.gamma1) + lx * lx
    for m in range(1, M):
        lm = log_m[m - 2] if m > 1 else 0
        d = be.log1p(x / m)
        total = total + ((d - x / m) * (2 * lm) + d * d)
    d = be.log1p(x / M)
    xpM = x + M
    f_M = (d - x / M) * (2 * lM) + d * d
    # integral of the summand from M to infinity is -F(M)
    F_M = (xpM * d - x) * (2 * lM - 2) + xpM * d * d
    tail = f_M / 2 - F_M
    lu = be.log(xpM)
    inv_u = 1 / xpM
    pu = inv_u  # u^{-(n+1)} for n = 2k-2
    pM = inv_M
    for k in range(1, p + 1):
        n = 2 * k - 2
        d_u = _log_deriv_term(n, xpM, lu, pu, be)
        d_M = _log_deriv_term(n, M, lM, pM, be)
        d_M1 = _log_deriv_term(n + 1, M, lM, pM * inv_M, be)
        fk = 2 * (d_u - d_M) - 2 * x * d_M1
        tail = tail - fk * bcoef[k - 1]
        pu = pu * inv_u * inv_u
        pM = pM * inv_M * inv_M
    return total + tail, lx


def deninger_S(x, tol: float | None = None, precision: Precision = Precision.EXTENDED64):
    """Deninger's ``S(x)`` for ``0 < x <= 1``.

    Returns ``(value, error_bound)``; works on scalars or 1-d arrays (the
    bound is then per element).  Raises :class:`PrecisionError` if ``tol``
    is below what rounding at ``precision`` allows, naming the achievable
    bound.
    """
    precision = Precision.parse(precision)
    if tol is None:
        tol = DEFAULT_TOL[precision]
    if tol <= 0:
        raise ValueError("tol must be positive")
    be = precision.backend
    scalar = np.ndim(x) == 0
    with be.context():
        xs = be.real(np.atleast_1d(x) if not scalar else np.array([x], dtype=object if be.is_mp else None))
        xf = np.array([float(v) for v in xs]) if be.is_mp else xs.astype(np.float64)
        if np.any((xf <= 0) | (xf > 1)):
            raise ValueError("deninger_S argument must lie in (0, 1]")
        M, p, trunc = em_plan(tol * TRUNC_SHARE)
        log_sq = np.log(xf) ** 2
        floor = _rounding_floor(log_sq, M, p, precision)
        if float(np.max(floor)) > tol:
            raise PrecisionError(
                f"tol={tol:g} unreachable at {precision.value}; achievable bound is {float(np.max(floor)):.3g}"
            )
        val, _ = _deninger_S_array(xs, M, p, precision)
    err = trunc * xf * xf + floor
    if scalar:
        return val[0], float(err[0])
    return val, err


def deninger_S_terms(x: float, m: np.ndarray) -> np.ndarray:
    """Raw summands ``log(x+m)^2 - log(m)^2 - 2x log(m)/m`` in float64 (diagnostic)."""
    m = np.asarray(m, dtype=np.float64)
    lm = np.log(m)
    d = np.log1p(x / m)
    return 2 * lm * (d - x / m) + d * d


# ---------------------------------------------------------------------------
# Per-q tables


@dataclass
class SpecialValueTable:
    """``log Gamma(a/q)`` and ``S(a/q)`` for ``a = 1..q-1`` (index ``a-1``)."""

    q: int
    loggamma: np.ndarray
    sval: np.ndarray
    precision: Precision
    tol: float
    loggamma_tol: float

    def gauss_residual(self) -> float:
        """``sum log Gamma(a/q) - ((q-1)/2) log 2pi + log(q)/2`` as a float."""
        be = self.precision.backend
        with be.context():
            s = self.loggamma.sum()
            c = constants(self.precision)
            r = s - c.log2pi * be.const(mpmath.mpf(self.q - 1) / 2) + be.log(be.real([self.q]))[0] / 2
        return float(r)


def build_special_table(
    q: int,
    precision: Precision | str = Precision.EXTENDED64,
    tol: float | None = None,
    cache_dir: str | os.PathLike | None = None,
) -> SpecialValueTable:
    """Tables of ``log Gamma(a/q)`` and ``S(a/q)``.

    If ``cache_dir`` (or the ``LCHI_CACHE_DIR`` environment variable) is set,
    tables are read from / written to the binary cache there.
    """
    from . import cache

    q = _check_odd_prime(q)
    precision = Precision.parse(precision)
    if tol is None:
        tol = DEFAULT_TOL[precision]
    if cache_dir is None:
        cache_dir = os.environ.get("LCHI_CACHE_DIR") or None
    if cache_dir is not None:
        hit = cache.load_special_table(cache_dir, q, precision)
        if hit is not None and hit.tol <= tol:
            return hit
    be = precision.backend
    with be.context():
        x = be.ratios(np.arange(1, q), q)
        lg = _log_gamma_array(x, precision)
        sval, err = deninger_S(x, tol=tol, precision=precision)
    table = SpecialValueTable(
        q=q,
        loggamma=lg,
        sval=sval,
        precision=precision,
        tol=float(np.max(err)),
        loggamma_tol=64 * precision.eps * max(1.0, math.log(q)),
    )
    if cache_dir is not None:
        cache.save_special_table(cache_dir, table)
    return table
