"""``L'/L(1, chi)`` for every non-principal character modulo a prime.

For odd ``chi``::

    L'/L(1,chi) = gamma + log(2 pi) + sum_a conj(chi)(a) log Gamma(a/q) / B_{1,conj(chi)}

and for even ``chi != chi_0``::

    L'/L(1,chi) = gamma + log(2 pi) - (1/2) sum_a conj(chi)(a) S(a/q)
                                          / sum_a conj(chi)(a) log Gamma(a/q)

with ``B_{1,chi} = q^{-1} sum_a a chi(a)``.  All three character sums come
from one transform each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .arith import CharacterTable, build_character_table, von_mangoldt_table
from .chartransform import char_sums, naive_char_sums, parity_of
from .precision import Precision, PrecisionError, ld_to_mpf
from .special import SpecialValueTable, build_special_table, constants

DENOM_FLOOR = 1e-30
ESCALATION_THRESHOLD = 1e-5
INSTABILITY_GAP = 1e-8


@dataclass
class LogDerivSpectrum:
    """``ld[j] = L'/L(1, chi_j)`` for ``j = 1..q-2``; ``ld[0]`` is NaN.

    ``b1[j]`` is ``B_{1, conj(chi_j)}`` (zero up to rounding for even ``j``)
    and ``err[j]`` an a-priori absolute error bound for ``ld[j]``.
    """

    q: int
    ld: np.ndarray
    precision: Precision
    b1: np.ndarray
    err: np.ndarray

    @property
    def n(self) -> int:
        return self.q - 1

    def as_complex(self) -> np.ndarray:
        """``ld[1:]`` as complex128."""
        return np.array([complex(v) for v in self.ld[1:]], dtype=np.complex128)

    def abs_values(self) -> np.ndarray:
        """``|ld[j]|`` for ``j = 1..q-2`` in the working precision."""
        be = self.precision.backend
        with be.context():
            return be.abs(self.ld[1:])


@dataclass
class MqRecord:
    """Per-modulus summary of the spectrum."""

    q: int
    m_q: float
    argmin_j: int
    argmin_parity: str
    M_q: float
    argmax_j: int
    ek: float
    m_q_normalized: float
    precision_used: Precision
    escalated: bool = False
    m_q_mp: mpmath.mpf | None = field(default=None, repr=False)
    m_q_err: float = 0.0
    ek_imag: float = 0.0
    audit: list = field(default_factory=list, repr=False)
    warnings: list = field(default_factory=list)


def b1_chi(table: CharacterTable, precision: Precision | str = Precision.EXTENDED64) -> np.ndarray:
    """``B_{1, conj(chi_j)}`` for all ``j`` via one transform of ``a/q``."""
    precision = Precision.parse(precision)
    be = precision.backend
    with be.context():
        x = be.ratios(np.arange(1, table.q), table.q)
    return char_sums(table, x, precision).conjugate_sums()


def _fft_eps(precision: Precision, n: int) -> float:
    return 8 * precision.eps * max(1.0, math.log2(n))


def _abs_float(values) -> np.ndarray:
    return np.array([abs(complex(v)) for v in values]) if values.dtype == object else np.abs(values).astype(np.float64)


def logderiv_spectrum(ct: CharacterTable, st: SpecialValueTable, naive: bool = False) -> LogDerivSpectrum:
    """Assemble the spectrum from the special-value table ``st``.

    Set ``naive`` to use the quadratic-time character sums instead of the
    transform (for cross-checking).  Raises :class:`PrecisionError` if a
    denominator is below ``1e-30`` in absolute value.
    """
    if ct.q != st.q:
        raise ValueError(f"table moduli differ: {ct.q} vs {st.q}")
    precision = st.precision
    be = precision.backend
    n = ct.n
    with be.context():
        x = be.ratios(np.arange(1, ct.q), ct.q)
    if naive:
        G, S, B = (naive_char_sums(ct, f, precision).conjugate_sums() for f in (st.loggamma, st.sval, x))
    else:
        G, S, B = char_sums(ct, np.stack([st.loggamma, st.sval, x]), precision).conjugate_sums()

    feps = _fft_eps(precision, n)
    absG, absS, absB = _abs_float(G), _abs_float(S), _abs_float(B)
    errG = n * st.loggamma_tol + feps * float(np.sum(np.abs(_abs_float(st.loggamma))))
    errS = n * st.tol + feps * float(np.sum(np.abs(_abs_float(st.sval))))
    errB = feps * n / 2

    c = constants(precision)
    with be.context():
        base = c.gamma + c.log2pi
    ld = np.empty(n, dtype=be.complex_dtype)
    err = np.zeros(n)
    ld[0] = mpmath.mpc(mpmath.nan) if be.is_mp else np.nan
    err[0] = np.nan
    odd = np.arange(1, n, 2)
    even = np.arange(2, n, 2)
    for idx, den, d_abs in ((odd, B, absB), (even, G, absG)):
        small = idx[d_abs[idx] < DENOM_FLOOR]
        if small.size:
            raise PrecisionError(f"q={ct.q}: denominator below {DENOM_FLOOR:g} at character j={int(small[0])}")
    with be.context():
        ld[odd] = G[odd] / B[odd] + base
        ld[even] = -(S[even] / G[even] / 2) + base
    err[odd] = (errG + absG[odd] / absB[odd] * errB) / absB[odd]
    err[even] = (errS + absS[even] / absG[even] * errG) / absG[even] / 2
    err[1:] += 4 * precision.eps * (np.abs(_abs_float(ld[1:])) + 1)
    return LogDerivSpectrum(q=ct.q, ld=ld, precision=precision, b1=B, err=err)


def _first_extreme(absvals, n: int, pick) -> int:
    """Index ``j >= 1`` of the first min/max, folded onto ``min(j, n-j)``."""
    if absvals.dtype == object:
        target = pick(absvals)
        k = next(i for i, v in enumerate(absvals) if v == target)
    else:
        k = int(np.argmin(absvals) if pick is min else np.argmax(absvals))
    j = k + 1
    return min(j, n - j)


def mq_record(spec: LogDerivSpectrum) -> MqRecord:
    """Extremes of ``|ld|`` and the Euler-Kronecker constant.

    Conjugate pairs share ``|ld|``, so the reported index is the smaller
    member of the pair.
    """
    be = spec.precision.backend
    n = spec.n
    absvals = spec.abs_values()
    jmin = _first_extreme(absvals, n, min)
    jmax = _first_extreme(absvals, n, max)
    m_q = absvals[jmin - 1]
    M_q = absvals[jmax - 1]
    c = constants(spec.precision)
    with be.context():
        if be.is_mp:
            total = mpmath.fsum(spec.ld[1:])
            ek_re, ek_im = c.gamma + total.real, total.imag
        else:
            total = np.sum(spec.ld[1:])
            ek_re, ek_im = c.gamma + total.real, total.imag
    m_mp = m_q if be.is_mp else ld_to_mpf(m_q)
    rec = MqRecord(
        q=spec.q,
        m_q=float(m_q),
        argmin_j=jmin,
        argmin_parity=parity_of(jmin, spec.q),
        M_q=float(M_q),
        argmax_j=jmax,
        ek=float(ek_re),
        m_q_normalized=200.0 * spec.q * float(m_q) / 21.0,
        precision_used=spec.precision,
        m_q_mp=m_mp,
        m_q_err=float(spec.err[jmin]),
        ek_imag=float(ek_im),
    )
    ek_tol = float(np.nansum(spec.err)) + 1e-12
    if abs(rec.ek_imag) > ek_tol:
        rec.warnings.append(f"imaginary part of Euler-Kronecker sum {rec.ek_imag:.3g} exceeds {ek_tol:.3g}")
    return rec


def compute_spectrum(
    q: int,
    precision: Precision | str = Precision.EXTENDED64,
    g: int | None = None,
    tol: float | None = None,
    cache_dir=None,
) -> LogDerivSpectrum:
    ct = build_character_table(q, g)
    st = build_special_table(q, precision, tol=tol, cache_dir=cache_dir)
    return logderiv_spectrum(ct, st)


def escalate_precision(
    ct: CharacterTable,
    threshold: float = ESCALATION_THRESHOLD,
    record: MqRecord | None = None,
    cache_dir=None,
) -> MqRecord:
    """Recompute at quad precision when the extended ``m_q`` is below ``threshold``.

    The returned record keeps both values in ``audit``; a gap above ``1e-8``
    between them is reported in ``warnings``.
    """
    if record is None:
        st = build_special_table(ct.q, Precision.EXTENDED64, cache_dir=cache_dir)
        record = mq_record(logderiv_spectrum(ct, st))
    record.audit.append((record.precision_used.value, record.m_q_mp))
    if record.precision_used is Precision.QUAD113 or record.m_q >= threshold:
        return record
    st = build_special_table(ct.q, Precision.QUAD113, cache_dir=cache_dir)
    quad = mq_record(logderiv_spectrum(ct, st))
    quad.audit = record.audit + [(quad.precision_used.value, quad.m_q_mp)]
    quad.warnings = record.warnings + quad.warnings
    quad.escalated = True
    gap = abs(quad.m_q_mp - record.m_q_mp)
    if gap > INSTABILITY_GAP:
        quad.warnings.append(f"extended and quad m_q differ by {mpmath.nstr(gap, 3)}")
    return quad


def compute_record(
    q: int,
    precision: Precision | str = Precision.EXTENDED64,
    threshold: float = ESCALATION_THRESHOLD,
    cache_dir=None,
) -> MqRecord:
    """Full per-modulus pipeline including the escalation policy."""
    precision = Precision.parse(precision)
    ct = build_character_table(q)
    st = build_special_table(q, precision, cache_dir=cache_dir)
    rec = mq_record(logderiv_spectrum(ct, st))
    if precision is Precision.EXTENDED64:
        rec = escalate_precision(ct, threshold, rec, cache_dir=cache_dir)
    return rec


def series_oracle(q: int, j: int, N: int = 10**6, g: int | None = None) -> tuple[complex, float]:
    """``-sum_{n<=N, q does not divide n} Lambda(n) chi_j(n)/n`` in float64.

    Returns the partial sum and a heuristic tolerance ``3 log(qN)/sqrt(N)``
    (square-root cancellation in the tail, not a proven bound).
    """
    ct = build_character_table(q, g)
    if not 1 <= j <= ct.n - 1:
        raise ValueError(f"j must be a non-principal index, got {j}")
    if N < 1000:
        raise ValueError("N must be at least 1000")
    lam = von_mangoldt_table(N).lam
    n_idx = np.flatnonzero(lam)
    n_idx = n_idx[n_idx % q != 0]
    k = ct.dlog[(n_idx % q) - 1]
    phase = 2 * np.pi * ((j * k) % ct.n) / ct.n
    terms = lam[n_idx] / n_idx * np.exp(1j * phase)
    value = -complex(math.fsum(terms.real), math.fsum(terms.imag))
    return value, 3 * math.log(q * N) / math.sqrt(N)


def empirical_moment(spec: LogDerivSpectrum, k: int, l: int) -> complex:
    """``(q-1)^{-1} sum_{j != 0} ld_j^k conj(ld_j)^l`` over all non-principal characters."""
    if k < 0 or l < 0 or k + l == 0:
        raise ValueError("need k, l >= 0 and k + l > 0")
    z = spec.as_complex()
    return complex(np.sum(z**k * np.conj(z) ** l) / spec.n)

