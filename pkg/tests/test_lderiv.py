import math
from decimal import Decimal

import mpmath
import numpy as np
import pytest

from lchi.arith import build_character_table, primitive_roots, sieve_primes
from lchi.lderiv import (
    b1_chi,
    compute_record,
    compute_spectrum,
    empirical_moment,
    escalate_precision,
    logderiv_spectrum,
    mq_record,
    series_oracle,
)
from lchi.precision import Precision, PrecisionError
from lchi.special import SpecialValueTable, build_special_table, constants

EXT, QUAD = Precision.EXTENDED64, Precision.QUAD113


def test_b1_examples():
    b = b1_chi(build_character_table(3))
    assert abs(complex(b[1]) - (-1 / 3)) < 1e-18
    b = b1_chi(build_character_table(101))
    assert np.max(np.abs(b[2::2].astype(complex))) < 1e-10 * 101
    assert np.min(np.abs(b[1::2].astype(complex))) > 0
    b5 = b1_chi(build_character_table(5))
    direct = sum(a * np.exp(-2j * np.pi * build_character_table(5).dlog[a - 1] / 4) for a in range(1, 5)) / 5
    assert abs(complex(b5[1]) - direct) < 1e-15 and abs(direct) > 0


@pytest.mark.parametrize("q", [3, 5, 7, 13, 61, 283, 997])
def test_extended_matches_reference(q, table1):
    rec = mq_record(compute_spectrum(q))
    assert abs(Decimal(repr(rec.m_q)) - Decimal(table1[q])) < Decimal("1e-16")


def test_q3_closed_form():
    c = constants(EXT)
    lg = build_special_table(3).loggamma
    val = abs(c.gamma + c.log2pi - 3 * (lg[0] - lg[1]))
    assert float(val) == pytest.approx(0.368281615970147842, abs=1e-17)
    assert float(compute_spectrum(3).ld[1].real) == pytest.approx(float(val), abs=1e-18)


def test_conjugate_pairs_and_quadratic_character():
    for q in (7, 101, 1009):
        s = compute_spectrum(q)
        ld = s.ld[1:].astype(complex)
        assert np.max(np.abs(ld - np.conj(ld[::-1]))) < 1e-14
        assert abs(s.ld[(q - 1) // 2].imag) < 1e-15


def test_record_invariants():
    s = compute_spectrum(211)
    rec = mq_record(s)
    absv = np.abs(s.ld[1:].astype(complex))
    assert np.all(rec.m_q <= absv * (1 + 1e-15)) and np.all(absv <= rec.M_q * (1 + 1e-15))
    assert rec.m_q_normalized == 200.0 * 211 * rec.m_q / 21.0
    assert rec.argmin_j <= 105 and rec.argmax_j <= 105
    assert abs(absv[rec.argmin_j - 1] - rec.m_q) < 1e-15
    assert rec.argmin_parity == ("odd" if rec.argmin_j % 2 else "even")
    assert abs(rec.ek_imag) < 1e-8 and not rec.warnings


def test_normalised_minimum_at_7(table1):
    rec = mq_record(compute_spectrum(7))
    assert rec.m_q_normalized == pytest.approx(1.042379, abs=1e-6)


def test_naive_path_agrees():
    for q in sieve_primes(499)[1:].tolist():
        ct, st = build_character_table(q), build_special_table(q)
        a = logderiv_spectrum(ct, st).ld[1:].astype(complex)
        b = logderiv_spectrum(ct, st, naive=True).ld[1:].astype(complex)
        assert np.max(np.abs(a - b) / np.abs(b)) < 1e-10, q


def test_values_bounded_small_q():
    for q in sieve_primes(997)[1:].tolist():
        s = compute_spectrum(q)
        assert np.max(np.abs(s.ld[1:].astype(complex))) <= 10
        assert abs(mq_record(s).ek_imag) < 1e-8


def test_denominator_failure_names_j():
    ct = build_character_table(7)
    st = build_special_table(7)
    bad = SpecialValueTable(7, np.zeros(6, dtype=np.longdouble), st.sval, EXT, st.tol, st.loggamma_tol)
    with pytest.raises(PrecisionError, match="j=2"):
        logderiv_spectrum(ct, bad)


def test_escalation_policy():
    assert not compute_record(61).escalated
    assert not compute_record(3).escalated
    ext = mq_record(compute_spectrum(7))
    rec = escalate_precision(build_character_table(7), threshold=0.1, record=ext)
    assert rec.escalated and rec.precision_used is QUAD
    assert [p for p, _ in rec.audit] == ["extended64", "quad113"]
    assert abs(rec.m_q - ext.m_q) <= 1e-15 * ext.m_q
    assert not rec.warnings


def test_escalation_flags_instability():
    ext = mq_record(compute_spectrum(7))
    ext.m_q_mp = ext.m_q_mp + mpmath.mpf("1e-6")
    rec = escalate_precision(build_character_table(7), threshold=0.1, record=ext)
    assert any("differ" in w for w in rec.warnings)


def test_quad_spectrum_matches_extended():
    a = compute_spectrum(101, EXT).ld[1:]
    b = compute_spectrum(101, QUAD).ld[1:]
    with mpmath.workprec(128):
        assert max(abs(mpmath.mpc(complex(x)) - y) for x, y in zip(a, b)) < 1e-15


def _hurwitz_oracle(q, j):
    """``L'/L(1, chi_j)`` from digamma and generalised Stieltjes constants.

    Uses ``L(1,chi) = -(1/q) sum chi(a) psi(a/q)`` and
    ``L'(1,chi) = (1/q) sum chi(a) (psi(a/q) log q - gamma_1(a/q))``.
    """
    ct = build_character_table(q)
    n = q - 1
    L = dL = 0
    for a in range(1, q):
        chi = mpmath.expjpi(mpmath.mpf(2 * j * int(ct.dlog[a - 1])) / n)
        x = mpmath.mpf(a) / q
        psi = mpmath.digamma(x)
        L -= chi * psi
        dL += chi * (psi * mpmath.log(q) - mpmath.stieltjes(1, x))
    return dL / L


@pytest.mark.parametrize("q", [7, 13])
def test_quad_matches_hurwitz_oracle(q):
    spec = compute_spectrum(q, Precision.QUAD113)
    with mpmath.workdps(45):
        for j in range(1, q - 1):
            ref = _hurwitz_oracle(q, j)
            assert abs(spec.ld[j] - ref) < 1e-32


def test_series_oracle():
    s3 = complex(compute_spectrum(3).ld[1])
    v, tol = series_oracle(3, 1, 10**7)
    assert abs(v - s3) < tol
    assert abs(v - s3) / abs(s3) < 5e-3
    v2, _ = series_oracle(3, 1, 2 * 10**7)
    assert abs(v2 - v) < tol
    a, _ = series_oracle(7, 1, 10**5)
    b, _ = series_oracle(7, 5, 10**5)
    assert abs(a - np.conj(b)) < 1e-12
    with pytest.raises(ValueError):
        series_oracle(7, 0, 10**5)


def test_series_oracle_tracks_spectrum():
    s = compute_spectrum(101)
    for j in (1, 2, 50, 77):
        v, tol = series_oracle(101, j, 10**6)
        assert abs(v - complex(s.ld[j])) < tol


def test_empirical_moment():
    q = 1009
    s = compute_spectrum(q)
    rec = mq_record(s)
    m10 = empirical_moment(s, 1, 0)
    assert abs(m10.real - (rec.ek - float(constants(EXT).gamma)) / (q - 1)) < 1e-12
    m11 = empirical_moment(s, 1, 1)
    assert m11.real > 0 and abs(m11.imag) < 1e-12
    with pytest.raises(ValueError):
        empirical_moment(s, 0, 0)


def test_primitive_root_invariance_10007():
    q = 10007
    g1, g2 = primitive_roots(q, 2)
    r1 = mq_record(compute_spectrum(q, g=g1))
    r2 = mq_record(compute_spectrum(q, g=g2))
    assert abs(r1.m_q - r2.m_q) <= 1e-10 * r1.m_q
    assert abs(r1.M_q - r2.M_q) <= 1e-10 * r1.M_q
    assert abs(r1.ek - r2.ek) <= 1e-10 * abs(r1.ek)
    assert r1.argmin_parity == r2.argmin_parity
