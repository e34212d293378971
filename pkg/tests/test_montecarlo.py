import math

import numpy as np
import pytest

from hdmax import montecarlo as mc
from hdmax import multipliers as mp_
from hdmax.numerics import DomainError

N = 10 ** 6


def test_sampler_deterministic():
    a = next(mc.gaussian_sampler(7, 10, seed=42))
    b = next(mc.gaussian_sampler(7, 10, seed=42))
    assert a.shape == (10, 7)
    assert np.array_equal(a, b)
    c = next(mc.gaussian_sampler(7, 10, seed=43))
    assert not np.array_equal(a, c)


def test_sampler_blocks_independent_of_partition():
    # any worker computing block b alone reproduces the stream's block b
    d, n, seed = 3, 3 * mc.BLOCK_SAMPLES + 17, 9
    stream = list(mc.gaussian_sampler(d, n, seed))
    assert len(stream) == 4 and stream[-1].shape == (17, d)
    for b in (2, 0, 3, 1):
        rows = stream[b].shape[0]
        assert np.array_equal(mc._block_normals(seed, 0, b, rows, d), stream[b])


def test_sampler_moments():
    x = np.concatenate([blk[:, 0] for blk in mc.gaussian_sampler(1, N, seed=5)])
    assert abs(x.mean()) <= 3.0 / math.sqrt(N)
    assert abs(x.var() - 1.0) <= 5e-3


def test_pairwise_reduction_matches_numpy():
    rng = np.random.default_rng(0)
    chunks = [rng.normal(3.0, 2.0, size=k) for k in (5, 17, 1, 40, 8)]
    parts = [(c.size, c.mean(), float(np.sum((c - c.mean()) ** 2))) for c in chunks]
    n, mean, m2 = mc._pairwise(parts)
    allv = np.concatenate(chunks)
    assert n == allv.size
    assert mean == pytest.approx(allv.mean(), rel=1e-14)
    assert m2 / (n - 1) == pytest.approx(allv.var(ddof=1), rel=1e-12)


def test_sphere_symbol_at_zero():
    est = mc.mc_sphere_symbol(0.0, 7, 1000, seed=1)
    assert est.mean == 1.0 and est.stderr == 0.0 and est.n_samples == 1000


def test_sphere_symbol_d3():
    est = mc.mc_sphere_symbol(0.25, 3, N, seed=11)
    assert est.agrees_with(2.0 / math.pi)


def test_sphere_symbol_d50_against_quadrature():
    est = mc.mc_sphere_symbol(2.0, 50, N, seed=12)
    assert est.agrees_with(mp_.mu(2.0, 50).value)


def test_sphere_imaginary_part_vanishes():
    est = mc.mc_sphere_symbol(0.8, 5, 200_000, seed=13, part="imag")
    assert est.agrees_with(0.0)


def test_gaussian_symbol_values():
    assert mc.mc_gaussian_symbol(0.0, 4, 500, seed=1).mean == 1.0
    assert mc.mc_gaussian_symbol(1.0, 2, N, seed=14).agrees_with(math.exp(-math.pi ** 2))
    d = 36
    assert mc.mc_gaussian_symbol(math.sqrt(d), d, N, seed=15).agrees_with(math.exp(-2 * math.pi ** 2))


def test_reproducible_estimates():
    a = mc.mc_sphere_symbol(1.0, 6, 5000, seed=99)
    b = mc.mc_sphere_symbol(1.0, 6, 5000, seed=99)
    assert a == b


def test_parameter_errors():
    with pytest.raises(DomainError):
        mc.mc_sphere_symbol(1.0, 5, 99, seed=1)
    with pytest.raises(DomainError):
        mc.mc_sphere_symbol(1.0, 2, 1000, seed=1)
    with pytest.raises(DomainError):
        mc.mc_gaussian_symbol(-1.0, 5, 1000, seed=1)
    with pytest.raises(DomainError):
        mc.mc_sphere_symbol(1.0, 5, 1000, seed=-1)
    with pytest.raises(DomainError):
        mc.chi_square_concentration(100, 0.3, 9999, seed=1)
    with pytest.raises(DomainError):
        mc.chi_square_concentration(100, 0.5, 10_000, seed=1)


def test_concentration_window_shapes():
    lo, hi = mc.concentration_window(100, 0.3)
    assert lo == pytest.approx(100 - 2 * 100 ** 0.8)
    assert hi == pytest.approx(100 + 2 * 100 ** 0.8 + 2 * 100 ** 0.3)
    assert mc.concentration_window(100, 0.3, "symmetric")[1] == pytest.approx(100 + 2 * 100 ** 0.8)
    assert mc.concentration_threshold(100, 0.3) == pytest.approx(0.9813, abs=1e-4)


def test_concentration_d100():
    est = mc.chi_square_concentration(100, 0.3, N, seed=21)
    assert est.at_least(mc.concentration_threshold(100, 0.3))


def test_concentration_full_window():
    est = mc.chi_square_concentration(10, 0.2, 20_000, seed=22, kind="full")
    assert est.mean == 1.0


def test_concentration_against_exact_law():
    est = mc.chi_square_concentration(20, 0.2, N, seed=23)
    exact = mc.exact_window_probability(20, 0.2)
    assert est.agrees_with(exact)


def test_reseed_contract():
    calls = []

    def run(seed):
        calls.append(seed)
        return mc.MCEstimate(0.0 if len(calls) == 1 else 1.0, 0.1, 100, seed)

    est, ok, attempts = mc.with_one_reseed(run, lambda e: e.agrees_with(1.0), seed=5)
    assert ok and attempts == 2 and calls[1] == mc.reseed(5) != 5
    est, ok, attempts = mc.with_one_reseed(lambda s: mc.MCEstimate(0.0, 0.1, 100, s), lambda e: e.mean > 1, 5)
    assert not ok and attempts == 2
