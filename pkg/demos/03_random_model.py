"""
The random model and the character values
==========================================

Replace chi(p) by independent uniform points X(p) on the unit circle.  The
resulting random sum Ld(1, X) predicts how L'/L(1, chi) is distributed as chi
varies.  This script samples the model, checks its second moment against the
exact series, evaluates the characteristic function and compares the model
with the actual values for a few moduli.
"""

import numpy as np

from lchi.arith import von_mangoldt_table
from lchi.lderiv import compute_spectrum, empirical_moment
from lchi.randmodel import (
    MomentSpec,
    RandomModelConfig,
    discrepancy_estimate,
    exact_moment,
    phi_rand,
    probability_in_rectangle,
    sample_ld,
    sample_moment,
)

config = RandomModelConfig(prime_cutoff=10_000, samples=200_000, seed=2024)
samples = sample_ld(config)
print(f"{samples.size} samples, P = {config.prime_cutoff}, seed = {config.seed}")

lt = von_mangoldt_table(10**6)
exact, tail = exact_moment(MomentSpec(1, 1, 10**6), lt)
mc, se = sample_moment(samples, 1, 1)
print(f"E|Ld|^2: Monte Carlo {mc.real:.4f} +- {se:.4f}, exact {exact:.6f} (tail <= {tail:.1e})")

for t in (1, 3, 10, 30):
    print(f"|phi_rand({t}, {t})| = {abs(phi_rand(t, t, config)):.3e}")

# small values of the model: the probability of a box around 0 scales like its area
for eps in (0.3, 0.15):
    p, err = probability_in_rectangle(samples, (-eps, eps, -eps, eps))
    print(f"P(|Re|, |Im| <= {eps}) = {p:.4f} +- {err:.4f}")

for q in (101, 1009, 10007):
    spec = compute_spectrum(q)
    d = discrepancy_estimate(spec, samples)
    m = empirical_moment(spec, 1, 1).real
    print(f"q={q:5d}: mean |L'/L|^2 over characters {m:.4f}, discrepancy estimate {d:.4f}")
