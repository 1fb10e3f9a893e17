"""The random model ``Ld(1, X) = -sum_n Lambda(n) X(n)/n``.

``X(p)`` are independent and uniform on the unit circle and ``X`` is
extended completely multiplicatively, so summing the prime powers gives
``Ld(1, X) = -sum_p log(p) X(p) / (p - X(p))``, the same sign convention
as ``L'/L(1, chi) = -sum_n Lambda(n) chi(n)/n``.  This module
samples the truncated sum, evaluates its exact moments through the
von Mangoldt convolution powers, computes its characteristic function by
per-prime quadrature and compares sampled distributions on rectangles.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np

from .arith import LambdaTable, lambda_k, sieve_primes

SAMPLE_BLOCK = 4096
QUAD_TOL = 1e-8
QUAD_MAX_POINTS = 2**20
TAIL_SIEVE_LIMIT = 10**7


class QuadratureError(ArithmeticError):
    """Trapezoid refinement did not reach the requested stability."""


@dataclass(frozen=True)
class RandomModelConfig:
    """Truncation, sample count, seed and base quadrature size."""

    prime_cutoff: int = 10_000
    samples: int = 1_000_000
    seed: int = 0
    quadrature_points: int = 64

    def __post_init__(self):
        if self.prime_cutoff < 100:
            raise ValueError("prime_cutoff must be at least 100")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        qp = self.quadrature_points
        if qp < 64 or qp & (qp - 1):
            raise ValueError("quadrature_points must be a power of two >= 64")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass
class MomentSpec:
    """``E(Ld^k conj(Ld)^l)`` truncated at ``n <= cutoff``; ``tail_bound`` is filled in."""

    k: int
    l: int
    cutoff: int
    tail_bound: float | None = None


# ---------------------------------------------------------------------------
# Sampling


_QUARTER = np.array([1.0, 0.0, -1.0, 0.0])


@numba.njit(cache=True, fastmath=True)
def _sum_terms(u, p, logp, quarter, out):  # pragma: no cover - compiled
    # cos/sin of 2 pi u: split into quarter turns, Taylor on [-pi/4, pi/4]
    B, K = u.shape
    for i in range(B):
        re = 0.0
        im = 0.0
        for k in range(K):
            x = 4.0 * u[i, k]
            q = np.floor(x + 0.5)
            f = (x - q) * 1.5707963267948966
            f2 = f * f
            s = f * (1.0 + f2 * (-1.0 / 6 + f2 * (1.0 / 120 + f2 * (-1.0 / 5040 + f2 * (
                1.0 / 362880 + f2 * (-1.0 / 39916800 + f2 * (1.0 / 6227020800 + f2 * (-1.0 / 1307674368000))))))))
            c = 1.0 + f2 * (-0.5 + f2 * (1.0 / 24 + f2 * (-1.0 / 720 + f2 * (1.0 / 40320 + f2 * (
                -1.0 / 3628800 + f2 * (1.0 / 479001600 + f2 * (-1.0 / 87178291200 + f2 / 20922789888000.0)))))))
            qi = int(q) & 3
            cq = quarter[qi]
            sq = quarter[(qi + 3) & 3]
            c, s = c * cq - s * sq, s * cq + c * sq
            pk = p[k]
            # log p e^{it}/(p - e^{it}) = log p (p e^{it} - 1)/|p - e^{it}|^2
            w = logp[k] / (pk * pk + 1.0 - 2.0 * pk * c)
            re += (pk * c - 1.0) * w
            im += pk * s * w
        out[i] = complex(-re, -im)


def _block_sums(primes: np.ndarray, logp: np.ndarray, seed_seq, size: int, degenerate: bool = False) -> np.ndarray:
    if degenerate:
        u = np.zeros((size, primes.size))
    else:
        u = np.random.Generator(np.random.PCG64(seed_seq)).random((size, primes.size))
    out = np.empty(size, dtype=np.complex128)
    _sum_terms(u, primes.astype(np.float64), logp, _QUARTER, out)
    return out


def _run_block(args):
    return _block_sums(*args)


def sample_ld(config: RandomModelConfig, degenerate: bool = False, workers: int = 1) -> np.ndarray:
    """``config.samples`` draws of the model truncated at ``p <= prime_cutoff``.

    Row ``i`` of each block holds one uniform turn ``u_p`` per prime, and
    ``X(p) = exp(2 pi i u_p)``.  Blocks of ``SAMPLE_BLOCK`` samples draw from
    seeds spawned off ``config.seed``, so the output depends only on the
    config and not on ``workers``.  ``degenerate`` forces every angle to
    zero, giving the constant ``-sum_p log p/(p-1)``.
    """
    primes = sieve_primes(config.prime_cutoff)
    logp = np.log(primes.astype(np.float64))
    N = config.samples
    nblocks = -(-N // SAMPLE_BLOCK)
    seeds = np.random.SeedSequence(config.seed).spawn(nblocks)
    sizes = [min(SAMPLE_BLOCK, N - i * SAMPLE_BLOCK) for i in range(nblocks)]
    jobs = [(primes, logp, s, n, degenerate) for s, n in zip(seeds, sizes)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_block, jobs, chunksize=8))
    else:
        parts = [_run_block(j) for j in jobs]
    return np.concatenate(parts)


def sample_moment(samples: np.ndarray, k: int, l: int) -> tuple[complex, float]:
    """Sample mean of ``z^k conj(z)^l`` and its standard error."""
    z = np.asarray(samples)
    vals = z**k * np.conj(z) ** l
    mean = complex(vals.mean())
    se = math.sqrt((np.var(vals.real) + np.var(vals.imag)) / max(1, z.size - 1))
    return mean, se


# ---------------------------------------------------------------------------
# Exact moments


def moment_tail_bound(N: int, r: int) -> float:
    """Upper bound for ``sum_{n>N} log(n)^r / n^2``.

    Uses ``int_X^inf log(t)^r/t^2 dt = X^{-1} sum_i r!/(r-i)! log(X)^{r-i}``,
    valid once the summand decreases (``log X >= r/2``); the terms between
    ``N`` and that point are added directly.
    """
    start = max(N, math.ceil(math.exp(r / 2)))
    direct = math.fsum(math.log(n) ** r / n**2 for n in range(N + 1, start + 1))
    L = math.log(start)
    integral = sum(math.perm(r, i) * L ** (r - i) for i in range(r + 1)) / start
    return direct + integral


def exact_moment(spec: MomentSpec, lt: LambdaTable) -> tuple[float, float]:
    """``(-1)^{k+l} sum_{n<=N} Lambda_k(n) Lambda_l(n) / n^2`` and its tail bound.

    Mixed moments with ``k`` or ``l`` zero vanish identically.  Also stores
    the bound in ``spec.tail_bound``.
    """
    k, l, N = spec.k, spec.l, spec.cutoff
    if k < 0 or l < 0 or k + l == 0:
        raise ValueError("need k, l >= 0 and k + l > 0")
    if lt.N < N:
        raise ValueError(f"Lambda table cutoff {lt.N} below moment cutoff {N}")
    if k == 0 or l == 0:
        spec.tail_bound = 0.0
        return 0.0, 0.0
    a = lambda_k(lt, k)[: N + 1]
    b = a if l == k else lambda_k(lt, l)[: N + 1]
    if k == 1 and l == 1:
        idx = np.flatnonzero(a)
    else:
        idx = np.flatnonzero(a * b)
    n = idx.astype(np.float64)
    terms = a[idx] * b[idx] / (n * n)
    value = (-1) ** (k + l) * math.fsum(terms.tolist())
    tail = moment_tail_bound(N, k + l)
    spec.tail_bound = tail
    return value, tail


def lambda_squared_prime_form(N: int) -> float:
    """``sum_{p<=N} (log p)^2 / (p^2 - 1)`` minus the prime powers above ``N``.

    Equals ``sum_{n<=N} Lambda(n)^2/n^2`` by summing each geometric series
    in closed form; used as an independent check on :func:`exact_moment`.
    """
    primes = sieve_primes(N)
    terms = []
    for p in primes.tolist():
        lp2 = math.log(p) ** 2
        full = lp2 / (p * p - 1.0)
        # drop p^{2a} for p^a > N: sum_{a>A} p^{-2a} = p^{-2A}/(p^2-1)
        A = int(math.log(N) / math.log(p))
        while p ** (A + 1) <= N:
            A += 1
        while p**A > N:
            A -= 1
        terms.append(full - lp2 * float(p) ** (-2 * A) / (p * p - 1.0))
    return math.fsum(terms)


@dataclass
class GrowthReport:
    """Outcome of :func:`moment_growth_check`."""

    c: float
    ks: list[int]
    values: list[float]
    tails: list[float]
    bounds: list[float]
    c_needed: list[float]
    passed: bool
    c_truncated: list[float] = field(default_factory=list)
    c_min: float = field(init=False)

    def __post_init__(self):
        self.c_min = max(self.c_needed) if self.c_needed else 0.0


def moment_growth_check(max_k: int, lt: LambdaTable, c: float = 20.0, min_k: int = 8) -> GrowthReport:
    """Check ``E|Ld|^{2k} <= (c log k)^{2k}`` for ``min_k <= k <= max_k``.

    The tested quantity is the truncated moment plus its tail bound, so
    ``passed`` is a statement about the full moment.  ``c_needed[i]`` is
    the smallest constant that works for the i-th ``k`` once the tail bound
    is included; ``c_truncated`` ignores the tail and is a lower estimate.
    """
    if max_k > 12:
        raise ValueError("max_k is limited to 12")
    ks, vals, tails, bounds, need, trunc = [], [], [], [], [], []
    for k in range(min_k, max_k + 1):
        v, t = exact_moment(MomentSpec(k, k, lt.N), lt)
        ks.append(k)
        vals.append(v)
        tails.append(t)
        bounds.append((c * math.log(k)) ** (2 * k))
        need.append((v + t) ** (1 / (2 * k)) / math.log(k))
        trunc.append(v ** (1 / (2 * k)) / math.log(k))
    passed = all(v + t <= b for v, t, b in zip(vals, tails, bounds))
    return GrowthReport(
        c=c, ks=ks, values=vals, tails=tails, bounds=bounds, c_needed=need, passed=passed, c_truncated=trunc
    )


# ---------------------------------------------------------------------------
# Characteristic function


@lru_cache(maxsize=None)
def prime_tail_sum(P: int) -> float:
    """``sum_{p>P} (log p)^2 / p^2`` (sieve to ``10^7``, then ``int log t/t^2``)."""
    X = max(TAIL_SIEVE_LIMIT, 100 * P)
    primes = sieve_primes(X)
    primes = primes[primes > P].astype(np.float64)
    lp = np.log(primes)
    head = math.fsum((lp * lp / (primes * primes)).tolist())
    return head + (math.log(X) + 1) / X


def _per_prime_factors(u: float, v: float, primes: np.ndarray, M0: int, tol: float) -> np.ndarray:
    """Trapezoid rule for ``(2pi)^{-1} int exp(i(u Re w + v Im w)) dtheta`` per prime.

    ``w = -log(p) e^{i theta} / (p - e^{i theta})`` is the term of prime ``p``.
    """
    p = primes.astype(np.float64)[:, None]
    logp = np.log(p)

    def mean_at(theta):
        e = np.exp(1j * theta)[None, :]
        w = -logp * e / (p - e)
        return np.exp(1j * (u * w.real + v * w.imag)).mean(axis=1)

    M = M0
    cur = mean_at(2 * np.pi * np.arange(M) / M)
    out = np.empty(primes.size, dtype=np.complex128)
    active = np.arange(primes.size)
    per_prime_tol = tol / max(1, primes.size)
    while True:
        M2 = 2 * M
        odd = 2 * np.pi * (2 * np.arange(M) + 1) / M2
        p_act, l_act = p[active], logp[active]
        e = np.exp(1j * odd)[None, :]
        w = -l_act * e / (p_act - e)
        new = (cur + np.exp(1j * (u * w.real + v * w.imag)).mean(axis=1)) / 2
        done = np.abs(new - cur) <= per_prime_tol
        out[active[done]] = new[done]
        active, cur = active[~done], new[~done]
        M = M2
        if active.size == 0:
            return out
        if M >= QUAD_MAX_POINTS:
            raise QuadratureError(f"per-prime quadrature not stable at {M} points for u={u}, v={v}")


def phi_rand(u: float, v: float, config: RandomModelConfig, tol: float = QUAD_TOL) -> complex:
    """``E exp(i u Re Ld + i v Im Ld)`` for the model truncated at ``P``.

    Product of per-prime trapezoid integrals times the Gaussian tail factor
    ``exp(-(u^2+v^2) sum_{p>P} (log p)^2/(4 p^2))``.
    """
    if abs(u) > 1e3 or abs(v) > 1e3:
        raise ValueError("|u| and |v| are limited to 1000")
    if u == 0 and v == 0:
        return 1.0 + 0.0j
    primes = sieve_primes(config.prime_cutoff)
    factors = _per_prime_factors(u, v, primes, config.quadrature_points, tol)
    tail = math.exp(-(u * u + v * v) * prime_tail_sum(config.prime_cutoff) / 4)
    return complex(np.prod(factors) * tail)


# ---------------------------------------------------------------------------
# Distribution comparisons


def probability_in_rectangle(samples: np.ndarray, rect) -> tuple[float, float]:
    """Fraction of samples in ``[a,b] x [c,d]`` and its binomial standard error."""
    a, b, c, d = rect
    if not (a < b and c < d):
        raise ValueError("need a < b and c < d")
    z = np.asarray(samples)
    inside = (z.real >= a) & (z.real <= b) & (z.imag >= c) & (z.imag <= d)
    p = float(inside.mean())
    return p, math.sqrt(p * (1 - p) / z.size)


def _quadrant_cdfs(z: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Mass of the four corner quadrants anchored at every grid point."""
    G1 = edges.size
    ix = np.searchsorted(edges, z.real, side="right")
    iy = np.searchsorted(edges, z.imag, side="right")
    H = np.zeros((G1 + 1, G1 + 1))
    np.add.at(H, (ix, iy), 1.0)
    H /= z.size
    out = []
    for fx in (False, True):
        for fy in (False, True):
            A = H[::-1] if fx else H
            A = A[:, ::-1] if fy else A
            C = A.cumsum(axis=0).cumsum(axis=1)
            out.append(C[:G1, :G1])
    return np.stack(out)


def discrepancy_estimate(spec_or_values, samples: np.ndarray, grid: int = 64, box: float = 4.0) -> float:
    """Largest quadrant-probability gap between two empirical distributions.

    The first argument is a :class:`~lchi.lderiv.LogDerivSpectrum` (its
    non-principal values are used) or any complex array.  Quadrants in all
    four orientations are anchored on a ``(grid+1)^2`` lattice over
    ``[-box, box]^2``.
    """
    if hasattr(spec_or_values, "as_complex"):
        a = spec_or_values.as_complex()
    else:
        a = np.asarray(spec_or_values, dtype=np.complex128)
    b = np.asarray(samples, dtype=np.complex128)
    edges = np.linspace(-box, box, grid + 1)
    return float(np.max(np.abs(_quadrant_cdfs(a, edges) - _quadrant_cdfs(b, edges))))


# ---------------------------------------------------------------------------
# Export


def save_samples_csv(path, samples: np.ndarray, config: RandomModelConfig) -> None:
    """Two-column CSV (``re,im``) with the config echoed in a comment line."""
    z = np.asarray(samples)
    header = (
        f"seed={config.seed} prime_cutoff={config.prime_cutoff} samples={config.samples}\nre,im"
    )
    np.savetxt(path, np.column_stack([z.real, z.imag]), delimiter=",", header=header, fmt="%.17g")


def load_samples_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return data[:, 0] + 1j * data[:, 1]
