import math

import numpy as np
import pytest

from lchi.arith import sieve_primes, von_mangoldt_table
from lchi.cache import load_samples, save_samples
from lchi.randmodel import (
    MomentSpec,
    QuadratureError,
    RandomModelConfig,
    discrepancy_estimate,
    exact_moment,
    lambda_squared_prime_form,
    moment_growth_check,
    moment_tail_bound,
    phi_rand,
    prime_tail_sum,
    probability_in_rectangle,
    sample_ld,
    sample_moment,
    load_samples_csv,
    save_samples_csv,
)

SMALL = RandomModelConfig(prime_cutoff=1000, samples=20_000, seed=7)


@pytest.mark.parametrize(
    "kw", [dict(prime_cutoff=99), dict(samples=0), dict(quadrature_points=32), dict(quadrature_points=96), dict(seed=-1)]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        RandomModelConfig(**kw)


def test_degenerate_angles():
    cfg = RandomModelConfig(prime_cutoff=1000, samples=10)
    z = sample_ld(cfg, degenerate=True)
    p = sieve_primes(1000).astype(float)
    ref = -math.fsum((np.log(p) / (p - 1)).tolist())
    assert np.all(z.imag == 0) and np.allclose(z.real, ref, rtol=1e-13, atol=0)
    assert ref < 0


def test_seed_determinism_and_workers():
    a = sample_ld(SMALL)
    b = sample_ld(SMALL)
    c = sample_ld(SMALL, workers=2)
    assert np.array_equal(a, b) and np.array_equal(a, c)
    d = sample_ld(RandomModelConfig(prime_cutoff=1000, samples=20_000, seed=8))
    assert not np.array_equal(a, d)
    assert a.shape == (20_000,) and a.dtype == np.complex128


def test_sample_prefix_stable():
    # blocks are seeded independently, so a longer run extends a shorter one
    a = sample_ld(RandomModelConfig(prime_cutoff=1000, samples=5000, seed=3))
    b = sample_ld(RandomModelConfig(prime_cutoff=1000, samples=9000, seed=3))
    assert np.array_equal(a, b[:5000])


def test_sample_terms_against_direct_sum():
    # the compiled polynomial sincos must agree with numpy's exp
    from lchi.randmodel import _block_sums

    primes = sieve_primes(500)
    logp = np.log(primes.astype(float))
    seq = np.random.SeedSequence(11)
    z = _block_sums(primes, logp, seq, 3)
    u = np.random.Generator(np.random.PCG64(seq)).random((3, primes.size))
    e = np.exp(2j * np.pi * u)
    ref = -(logp * e / (primes - e)).sum(axis=1)
    assert np.max(np.abs(z - ref)) < 1e-13


def test_exact_moment_examples():
    lt = von_mangoldt_table(10**6)
    v, tail = exact_moment(MomentSpec(1, 1, 10**6), lt)
    assert abs(v - lambda_squared_prime_form(10**6)) < 1e-10
    assert 0 < tail < 1e-3
    for k, l in [(1, 0), (2, 0), (0, 3)]:
        spec = MomentSpec(k, l, 1000)
        assert exact_moment(spec, lt) == (0.0, 0.0) and spec.tail_bound == 0.0
    with pytest.raises(ValueError):
        exact_moment(MomentSpec(0, 0, 1000), lt)
    with pytest.raises(ValueError):
        exact_moment(MomentSpec(1, 1, 10**7), lt)


@pytest.mark.parametrize("k,l", [(1, 1), (2, 2), (2, 1), (3, 3)])
def test_tail_bound_soundness(k, l):
    N = 200_000
    lt = von_mangoldt_table(N)
    v_full, _ = exact_moment(MomentSpec(k, l, N), lt)
    half = MomentSpec(k, l, N // 2)
    v_half, tail = exact_moment(half, lt)
    assert half.tail_bound == tail and math.isfinite(tail)
    assert abs(v_full - v_half) < tail


def test_tail_bound_covers_brute_force():
    N, r = 1000, 4
    brute = math.fsum(math.log(n) ** r / n**2 for n in range(N + 1, 10**6))
    assert moment_tail_bound(N, r) > brute


def test_moment_growth():
    lt = von_mangoldt_table(20_000)
    rep = moment_growth_check(12, lt)
    assert rep.passed and rep.ks == list(range(8, 13))
    assert rep.values[0] > 0
    rep2 = moment_growth_check(12, von_mangoldt_table(40_000))
    assert abs(rep2.c_min / rep.c_min - 1) < 0.05
    with pytest.raises(ValueError):
        moment_growth_check(13, lt)


def test_phi_rand_basics(rng):
    cfg = RandomModelConfig()
    assert phi_rand(0, 0, cfg) == 1
    for _ in range(20):
        u, v = rng.uniform(-10, 10, 2)
        a = phi_rand(u, v, cfg)
        b = phi_rand(-u, -v, cfg)
        assert abs(a) <= 1
        assert abs(a - np.conj(b)) < 1e-10
    with pytest.raises(ValueError):
        phi_rand(2000, 0, cfg)


def test_phi_rand_diagonal_decay():
    cfg = RandomModelConfig()
    vals = [abs(phi_rand(t, t, cfg)) for t in (3, 10, 30)]
    assert vals[0] > vals[1] > vals[2]


def test_phi_rand_matches_monte_carlo():
    cfg = RandomModelConfig(prime_cutoff=1000, samples=200_000, seed=5)
    z = sample_ld(cfg)
    for u, v in [(1.0, 0.0), (0.5, -1.5), (2.0, 2.0)]:
        mc = np.mean(np.exp(1j * (u * z.real + v * z.imag)))
        exact = phi_rand(u, v, cfg) / math.exp(-(u * u + v * v) * prime_tail_sum(1000) / 4)
        assert abs(mc - exact) < 5 / math.sqrt(cfg.samples)


def test_phi_rand_cutoff_increase():
    lo, hi = RandomModelConfig(prime_cutoff=10**4), RandomModelConfig(prime_cutoff=10**5)
    for u, v in [(1, 1), (3, -2), (10, 0), (-7, 10)]:
        a, b = phi_rand(u, v, lo), phi_rand(u, v, hi)
        factor = math.exp(-(u * u + v * v) * prime_tail_sum(10**4) / 4)
        delta = abs(a / factor) * (1 - factor)
        assert abs(a - b) < delta


def test_phi_rand_quadrature_failure():
    with pytest.raises(QuadratureError):
        phi_rand(5, 5, RandomModelConfig(prime_cutoff=100), tol=1e-40)


def test_probability_in_rectangle():
    z = sample_ld(SMALL)
    p, se = probability_in_rectangle(z, (-np.inf, np.inf, -np.inf, np.inf))
    assert p == 1 and se == 0
    p, se = probability_in_rectangle(z, (-0.3, 0.3, -0.3, 0.3))
    assert 0 < p < 1 and se > 0
    with pytest.raises(ValueError):
        probability_in_rectangle(z, (1, 0, 0, 1))


def test_sample_moment_standard_error():
    z = sample_ld(SMALL)
    m, se = sample_moment(z, 1, 1)
    assert m.real > 0 and abs(m.imag) < 1e-12 and se > 0


def test_discrepancy_identical_is_zero():
    z = sample_ld(SMALL)
    assert discrepancy_estimate(z, z) == 0.0
    assert discrepancy_estimate(z[:5000], z[5000:]) < 0.05
    shifted = discrepancy_estimate(z + 1.0, z)
    assert shifted > 0.3


def test_sample_export_round_trip(tmp_path):
    z = sample_ld(RandomModelConfig(prime_cutoff=1000, samples=500, seed=1))
    save_samples_csv(tmp_path / "s.csv", z, RandomModelConfig(prime_cutoff=1000, samples=500, seed=1))
    assert np.array_equal(load_samples_csv(tmp_path / "s.csv"), z)
    assert "seed=1" in (tmp_path / "s.csv").read_text().splitlines()[0]
    save_samples(tmp_path / "s.bin", z, 1000)
    back, P = load_samples(tmp_path / "s.bin")
    assert P == 1000 and np.array_equal(back, z)


@pytest.mark.slow
def test_million_sample_moments(model_samples):
    cfg, z = model_samples
    lt = von_mangoldt_table(10**6)
    assert abs(z.mean()) < 0.01
    exact11, _ = exact_moment(MomentSpec(1, 1, 10**6), lt)
    assert abs(np.mean(np.abs(z) ** 2) / exact11 - 1) < 0.02
    for k, l in [(1, 1), (2, 2), (1, 0), (2, 1)]:
        value, tail = exact_moment(MomentSpec(k, l, 10**6), lt)
        mc, se = sample_moment(z, k, l)
        assert abs(mc - value) <= 3 * se + tail, (k, l)


@pytest.mark.slow
def test_small_value_probability_scales_like_area(model_samples):
    _, z = model_samples
    p1, _ = probability_in_rectangle(z, (-0.3, 0.3, -0.3, 0.3))
    p2, _ = probability_in_rectangle(z, (-0.15, 0.15, -0.15, 0.15))
    assert p2 > 0 and abs(p2 / p1 / 0.25 - 1) < 0.3


@pytest.mark.slow
def test_discrepancy_trend(model_samples):
    from lchi.lderiv import compute_spectrum

    _, z = model_samples
    d101 = discrepancy_estimate(compute_spectrum(101), z)
    d10007 = discrepancy_estimate(compute_spectrum(10007), z)
    assert d10007 < 2 * d101
