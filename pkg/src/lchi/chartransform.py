"""Character sums over ``(Z/qZ)^*`` as a length-``q-1`` DFT.

With ``a = g**k`` the sum ``sum_a chi_j(a) f(a)`` becomes
``sum_k exp(2 pi i jk/(q-1)) f(g**k)``, i.e. an (unnormalised) inverse DFT
of the reindexed data.  Sums against conjugate characters are the same
spectrum read at ``(q-1-j) mod (q-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arith import CharacterTable
from .fft import plan
from .precision import Precision

NAIVE_MAX_Q = 10_000


@dataclass
class CharacterSpectrum:
    """``values[j] = sum_a chi_j(a) f(a)``; ``j = 0`` is the principal character."""

    q: int
    values: np.ndarray
    precision: Precision

    @property
    def n(self) -> int:
        return self.q - 1

    def conjugate_sums(self) -> np.ndarray:
        """``sum_a conj(chi_j(a)) f(a)`` for every ``j`` (index reflection)."""
        return reflect(self.values)


def reflect(values: np.ndarray) -> np.ndarray:
    """``out[..., j] = values[..., (-j) mod n]``."""
    return np.concatenate([values[..., :1], values[..., 1:][..., ::-1]], axis=-1)


def _infer_precision(f, precision):
    if precision is not None:
        return Precision.parse(precision)
    return Precision.QUAD113 if np.asarray(f).dtype == object else Precision.EXTENDED64


def _validate(table: CharacterTable, f, precision: Precision) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim not in (1, 2) or f.shape[-1] != table.n:
        raise ValueError(f"expected {table.n} values for q={table.q}, got shape {f.shape}")
    if f.dtype == object:
        import mpmath

        if not all(mpmath.isfinite(v) for v in f.ravel()):
            raise ValueError("input contains NaN or infinity")
    elif not np.all(np.isfinite(f)):
        raise ValueError("input contains NaN or infinity")
    be = precision.backend
    with be.context():
        return be.complex(f) if be.is_mp else f.astype(np.clongdouble)


def char_sums(table: CharacterTable, f, precision: Precision | str | None = None) -> CharacterSpectrum:
    """All character sums of ``f`` (``f[a-1]`` holds the value at ``a``).

    ``f`` may also be a ``(rows, q-1)`` batch, giving a 2-d ``values``
    array.  Uses the cached mixed-radix plan for length ``q-1``.
    """
    precision = _infer_precision(f, precision)
    x = _validate(table, f, precision)
    reindexed = x[..., table.pow - 1]
    values = plan(table.n, precision).backward(reindexed)
    return CharacterSpectrum(q=table.q, values=values, precision=precision)


def naive_char_sums(
    table: CharacterTable,
    f,
    precision: Precision | str | None = None,
    allow_large: bool = False,
) -> CharacterSpectrum:
    """Direct ``O(q^2)`` evaluation of the same sums (test oracle).

    Refuses ``q > 10**4`` unless ``allow_large`` is set.
    """
    if table.q > NAIVE_MAX_Q and not allow_large:
        raise ValueError(f"naive character sums refused for q={table.q} > {NAIVE_MAX_Q}")
    precision = _infer_precision(f, precision)
    x = _validate(table, f, precision)
    be = precision.backend
    n = table.n
    reindexed = x[table.pow - 1]
    k = np.arange(n, dtype=np.int64)
    out = np.empty(n, dtype=be.complex_dtype)
    with be.context():
        for j in range(n):
            row = be.unit_roots((j * k) % n, n)
            if be.is_mp:
                import mpmath

                out[j] = mpmath.fsum(row * reindexed)
            else:
                out[j] = np.sum(row * reindexed)
    return CharacterSpectrum(q=table.q, values=out, precision=precision)


def parity_of(j: int, q: int) -> str:
    """``"odd"`` if ``chi_j(-1) = -1`` (i.e. ``j`` odd), else ``"even"``."""
    if not 0 <= j <= q - 2:
        raise ValueError(f"character index {j} out of range for q={q}")
    return "odd" if j % 2 else "even"
