"""Binary cache for special-value tables and random-model samples.

Layout (little endian, see ``docs/cache_format.md``)::

    header  <4sHHqHdd   magic b"LCHI", version, kind, key, precision, tol, aux
    payload float64 limbs

``kind`` is 1 for a special-value table (``key = q``) and 2 for a sample
file (``key = N``).  Reals are stored as ``limbs`` float64 values whose sum
is the number: 2 limbs for extended, 3 for quad, 1 for plain binary64.
Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import mpmath
import numpy as np

from .precision import Precision

MAGIC = b"LCHI"
VERSION = 1
HEADER = struct.Struct("<4sHHqHdd")
KIND_TABLE = 1
KIND_SAMPLES = 2
PREC_CODES = {Precision.EXTENDED64: 1, Precision.QUAD113: 2}
PREC_BINARY64 = 3
LIMBS = {1: 2, 2: 3, 3: 1}


class CacheFormatError(ValueError):
    pass


def table_path(cache_dir, q: int, precision: Precision) -> Path:
    return Path(cache_dir) / f"special_q{q}_{precision.value}.bin"


def to_limbs(values, limbs: int) -> np.ndarray:
    """Split reals (longdouble or mpf) into ``limbs`` float64 parts each."""
    out = np.zeros((len(values), limbs), dtype="<f8")
    for i, v in enumerate(values):
        if isinstance(v, mpmath.mpf):
            rest = v
            with mpmath.workprec(200):
                for j in range(limbs):
                    h = float(rest)
                    out[i, j] = h
                    rest = rest - h
        else:
            rest = np.longdouble(v)
            for j in range(limbs):
                h = float(rest)
                out[i, j] = h
                rest = rest - np.longdouble(h)
    return out


def from_limbs(arr: np.ndarray, precision: Precision | None):
    if precision is None:
        return arr[:, 0].astype(np.float64)
    if precision is Precision.EXTENDED64:
        return arr.astype(np.longdouble).sum(axis=1)
    out = np.empty(arr.shape[0], dtype=object)
    with mpmath.workprec(200):
        for i in range(arr.shape[0]):
            out[i] = mpmath.fsum(mpmath.mpf(float(x)) for x in arr[i])
    return out


def _write_atomic(path: Path, blob: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def read_header(blob: bytes) -> tuple:
    if len(blob) < HEADER.size:
        raise CacheFormatError("truncated header")
    magic, version, kind, key, prec, tol, aux = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CacheFormatError("bad magic")
    if version != VERSION:
        raise CacheFormatError(f"unsupported version {version}")
    if prec not in LIMBS:
        raise CacheFormatError(f"unknown precision code {prec}")
    return kind, key, prec, tol, aux


def save_special_table(cache_dir, table) -> Path:
    code = PREC_CODES[table.precision]
    head = HEADER.pack(MAGIC, VERSION, KIND_TABLE, table.q, code, table.tol, table.loggamma_tol)
    body = np.concatenate([to_limbs(table.loggamma, LIMBS[code]), to_limbs(table.sval, LIMBS[code])])
    path = table_path(cache_dir, table.q, table.precision)
    _write_atomic(path, head + body.tobytes())
    return path


def load_special_table(cache_dir, q: int, precision: Precision):
    """Table from the cache, or ``None`` if absent or unreadable."""
    from .special import SpecialValueTable

    path = table_path(cache_dir, q, precision)
    try:
        blob = path.read_bytes()
        kind, key, code, tol, aux = read_header(blob)
    except (OSError, CacheFormatError):
        return None
    if kind != KIND_TABLE or key != q or code != PREC_CODES[precision]:
        return None
    limbs = LIMBS[code]
    data = np.frombuffer(blob, dtype="<f8", offset=HEADER.size)
    if data.size != 2 * (q - 1) * limbs:
        return None
    data = data.reshape(2 * (q - 1), limbs)
    return SpecialValueTable(
        q=q,
        loggamma=from_limbs(data[: q - 1], precision),
        sval=from_limbs(data[q - 1 :], precision),
        precision=precision,
        tol=tol,
        loggamma_tol=aux,
    )


def save_samples(path, samples: np.ndarray, P: int) -> Path:
    """Complex binary64 samples; ``aux`` records the prime cutoff ``P``."""
    samples = np.asarray(samples, dtype=np.complex128)
    head = HEADER.pack(MAGIC, VERSION, KIND_SAMPLES, samples.size, PREC_BINARY64, 0.0, float(P))
    body = np.stack([samples.real, samples.imag], axis=1).astype("<f8")
    path = Path(path)
    _write_atomic(path, head + body.tobytes())
    return path


def load_samples(path) -> tuple[np.ndarray, int]:
    blob = Path(path).read_bytes()
    kind, key, code, _, aux = read_header(blob)
    if kind != KIND_SAMPLES or code != PREC_BINARY64:
        raise CacheFormatError("not a sample file")
    data = np.frombuffer(blob, dtype="<f8", offset=HEADER.size)
    if data.size != 2 * key:
        raise CacheFormatError("payload length does not match header")
    data = data.reshape(key, 2)
    return data[:, 0] + 1j * data[:, 1], int(aux)

