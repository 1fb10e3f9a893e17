"""
Character sums as one Fourier transform
=======================================

Writing a = g^k turns sum_a chi_j(a) f(a) into a length q-1 discrete Fourier
transform of f(g^k).  This script compares the fast transform with the
direct double loop and times both.
"""

import time

import numpy as np

from lchi.arith import build_character_table
from lchi.chartransform import char_sums, naive_char_sums
from lchi.fft import prime_factors

rng = np.random.default_rng(1)
for q in (101, 499, 2003, 9973):
    table = build_character_table(q)
    f = rng.standard_normal(q - 1)
    t0 = time.perf_counter()
    fast = char_sums(table, f).values
    t1 = time.perf_counter()
    slow = naive_char_sums(table, f).values
    t2 = time.perf_counter()
    rel = np.max(np.abs(fast - slow)) / np.max(np.abs(slow))
    print(
        f"q={q:5d} q-1={'*'.join(map(str, prime_factors(q - 1))):>12s}  "
        f"fast {1e3 * (t1 - t0):7.2f} ms  direct {1e3 * (t2 - t1):8.1f} ms  max rel diff {float(rel):.1e}"
    )

# for real f, the sum against chi_{q-1-j} is the conjugate of the sum against chi_j
table = build_character_table(61)
v = char_sums(table, rng.standard_normal(60)).values
print("conjugate symmetry defect at q=61:", float(np.max(np.abs(v[1:] - np.conj(v[1:][::-1])))))
