"""
The smallest logarithmic derivative for one modulus
===================================================

For a prime q every non-principal character chi mod q gives a number
L'/L(1, chi).  This script builds all of them for a small q, shows the
odd/even split and the conjugate pairs, and then recomputes the smallest
absolute value at quad precision to 30 digits.
"""

import numpy as np

from lchi.arith import build_character_table
from lchi.cli import single
from lchi.lderiv import compute_spectrum, mq_record, series_oracle

q = 13
table = build_character_table(q)
print(f"q = {q}, smallest primitive root g = {table.g}")
print("g^k mod q for k = 0..q-2:", table.pow.tolist())

# one value per character index j = 1..q-2; j odd means chi(-1) = -1
spec = compute_spectrum(q)
for j in range(1, q - 1):
    z = complex(spec.ld[j])
    kind = "odd " if j % 2 else "even"
    print(f"j={j:2d} {kind} L'/L(1,chi) = {z.real:+.15f} {z.imag:+.15f}i  |.| = {abs(z):.15f}")

# characters j and q-1-j are complex conjugates, so their values are too
z = spec.ld[1:].astype(complex)
print("conjugate pairs agree to", np.max(np.abs(z - np.conj(z[::-1]))))

rec = mq_record(spec)
print(f"m_q = {rec.m_q!r} at j={rec.argmin_j} ({rec.argmin_parity}), M_q = {rec.M_q!r}")
print(f"Euler-Kronecker constant = {rec.ek!r}")

# an independent (slow) check straight from the Dirichlet series
value, tol = series_oracle(q, rec.argmin_j, 10**6)
print(f"series up to 10^6: {value.real:+.6f} {value.imag:+.6f}i (heuristic tolerance {tol:.1e})")

# the same minimum with 30 certified digits
r = single(q, 30)
print(f"m_q at quad precision: {r.m_q}  ({r.digits_available} digits available)")
