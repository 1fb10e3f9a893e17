"""Working-precision levels and the array backends that implement them.

Two levels are supported:

* ``EXTENDED64`` -- numpy ``longdouble`` (x87 80-bit, 64-bit significand).
  Fully vectorised; used for sweeps.
* ``QUAD113`` -- mpmath numbers held in numpy object arrays, evaluated at
  128 working bits (a superset of the 113-bit binary128 significand).
  Slow, used for re-verification and high-digit reproduction.

The numerical kernels in :mod:`lchi.special` and :mod:`lchi.fft` are written
once against the small :class:`Backend` interface and run unchanged on
either level.
"""

from __future__ import annotations

import enum
from contextlib import contextmanager
from functools import lru_cache

import mpmath
import numpy as np


class PrecisionError(ArithmeticError):
    """A requested accuracy cannot be met, or a result is numerically unsafe."""


class Precision(enum.Enum):
    EXTENDED64 = "extended64"
    QUAD113 = "quad113"

    @property
    def bits(self) -> int:
        """Nominal significand width."""
        return 64 if self is Precision.EXTENDED64 else 113

    @property
    def work_bits(self) -> int:
        """Bits actually carried by the arithmetic."""
        return 64 if self is Precision.EXTENDED64 else 128

    @property
    def eps(self) -> float:
        return 2.0 ** (1 - self.work_bits)

    @property
    def backend(self) -> "Backend":
        return _backend(self)

    @classmethod
    def parse(cls, value: "Precision | str") -> "Precision":
        if isinstance(value, Precision):
            return value
        key = str(value).lower()
        aliases = {
            "extended": cls.EXTENDED64,
            "extended64": cls.EXTENDED64,
            "quad": cls.QUAD113,
            "quad113": cls.QUAD113,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown precision {value!r}") from None


def ld_to_mpf(v) -> mpmath.mpf:
    """Exact conversion of a longdouble (or float/int/mpf) to mpf."""
    if isinstance(v, np.longdouble):
        hi = float(v)
        lo = float(v - np.longdouble(hi))
        with mpmath.workprec(128):
            return mpmath.mpf(hi) + mpmath.mpf(lo)
    if isinstance(v, (np.floating, np.integer)):
        return mpmath.mpf(v.item())
    if isinstance(v, mpmath.mpf):
        return v
    return mpmath.mpf(v)


def to_mpc(v) -> mpmath.mpc:
    if isinstance(v, np.clongdouble):
        return mpmath.mpc(ld_to_mpf(v.real), ld_to_mpf(v.imag))
    if isinstance(v, np.complexfloating):
        return mpmath.mpc(complex(v))
    if isinstance(v, mpmath.mpc):
        return v
    if isinstance(v, (complex,)):
        return mpmath.mpc(v)
    return mpmath.mpc(ld_to_mpf(v))


def _mp_ufunc(fn):
    uf = np.frompyfunc(fn, 1, 1)

    def apply(x):
        out = uf(x)
        return out

    return apply


class Backend:
    """Elementwise math for one precision level.

    ``real``/``complex`` convert Python or mpmath numbers into the backend's
    array type; the ``log``/``cos``/... members are elementwise functions.
    """

    def __init__(self, precision: Precision):
        self.precision = precision
        self.is_mp = precision is Precision.QUAD113
        if self.is_mp:
            self.real_dtype = object
            self.complex_dtype = object
            self.log = _mp_ufunc(mpmath.log)
            self.log1p = _mp_ufunc(mpmath.log1p)
            self.exp = _mp_ufunc(mpmath.exp)
            self.sqrt = _mp_ufunc(mpmath.sqrt)
            self.abs = _mp_ufunc(abs)
            self.real_part = _mp_ufunc(lambda z: mpmath.mpf(z.real))
            self.imag_part = _mp_ufunc(lambda z: mpmath.mpf(z.imag))
            self.conj = _mp_ufunc(lambda z: mpmath.mpc(z).conjugate())
        else:
            self.real_dtype = np.longdouble
            self.complex_dtype = np.clongdouble
            self.log = np.log
            self.log1p = np.log1p
            self.exp = np.exp
            self.sqrt = np.sqrt
            self.abs = np.abs
            self.real_part = np.real
            self.imag_part = np.imag
            self.conj = np.conj

    @contextmanager
    def context(self):
        """Set the mpmath working precision (no-op for the numpy level)."""
        if self.is_mp:
            with mpmath.workprec(self.precision.work_bits):
                yield
        else:
            yield

    def const(self, value) -> object:
        """Convert an mpmath (or Python) real to a backend scalar."""
        if self.is_mp:
            with self.context():
                return +mpmath.mpf(value)
        with mpmath.workprec(192):
            v = mpmath.mpf(value)
            hi = float(v)
            mid = float(v - hi)
            lo = float(v - hi - mid)
        return np.longdouble(hi) + np.longdouble(mid) + np.longdouble(lo)

    def ratios(self, num, den: int) -> np.ndarray:
        """Correctly rounded ``num/den`` for an integer array ``num``."""
        num = np.asarray(num, dtype=np.int64)
        if self.is_mp:
            out = np.empty(num.shape, dtype=object)
            for i, a in enumerate(num.ravel().tolist()):
                out.flat[i] = mpmath.mpf(a) / den
            return out
        return num.astype(np.longdouble) / np.longdouble(den)

    def real(self, values) -> np.ndarray:
        if self.is_mp:
            arr = np.asarray(values)
            out = np.empty(arr.shape, dtype=object)
            with self.context():
                for i, v in enumerate(arr.ravel()):
                    out.flat[i] = +ld_to_mpf(v)
            return out
        return np.asarray(values, dtype=np.longdouble)

    def complex(self, values) -> np.ndarray:
        if self.is_mp:
            arr = np.asarray(values)
            out = np.empty(arr.shape, dtype=object)
            with self.context():
                for i, v in enumerate(arr.ravel()):
                    out.flat[i] = +to_mpc(v)
            return out
        return np.asarray(values, dtype=np.clongdouble)

    def cos_sin_2pi(self, num: np.ndarray, den: int):
        """cos and sin of ``2*pi*num/den`` for integers ``num``."""
        num = np.mod(np.asarray(num, dtype=np.int64), den)
        if self.is_mp:
            c = np.empty(num.shape, dtype=object)
            s = np.empty(num.shape, dtype=object)
            for i, a in enumerate(num.ravel().tolist()):
                t = mpmath.mpf(2 * a) / den
                c.flat[i] = mpmath.cospi(t)
                s.flat[i] = mpmath.sinpi(t)
            return c, s
        # quadrant k and offset r/den of a quarter turn; fold r past an
        # eighth turn onto its complement so quarter turns are exact
        k, r = np.divmod(4 * num, den)
        flip = 2 * r > den
        r = np.where(flip, den - r, r)
        ang = r.astype(np.longdouble) / np.longdouble(den) * (_TWO_PI_LD / 4)
        c0, s0 = np.cos(ang), np.sin(ang)
        c1, s1 = np.where(flip, s0, c0), np.where(flip, c0, s0)
        c = np.choose(k, [c1, -s1, -c1, s1])
        s = np.choose(k, [s1, c1, -s1, -c1])
        return c, s

    def unit_roots(self, num: np.ndarray, den: int) -> np.ndarray:
        """``exp(2*pi*i*num/den)`` as a complex backend array."""
        c, s = self.cos_sin_2pi(num, den)
        if self.is_mp:
            out = np.empty(c.shape, dtype=object)
            for i in range(c.size):
                out.flat[i] = mpmath.mpc(c.flat[i], s.flat[i])
            return out
        return c + 1j * s

    def to_float(self, x) -> float:
        return float(x)


_TWO_PI_LD = np.longdouble("6.283185307179586476925286766559005768")


@lru_cache(maxsize=None)
def _backend(precision: Precision) -> Backend:
    return Backend(precision)
