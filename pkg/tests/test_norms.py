"""Weighted-sample norms: distribution function, weak/strong norms, layer cake."""

import math

import numpy as np
import pytest

import obflow as ob
from helpers import random_samples


def brute_weak_norm(samples, p):
    """Independent oracle: explicit loop over candidate levels."""
    vals = np.abs(samples.values)
    best = 0.0
    for v in np.unique(vals):
        if v <= 0:
            continue
        weight_at_least = float(samples.weights[vals >= v].sum())
        best = max(best, v * weight_at_least ** (1.0 / p))
    return best


class TestDistributionFunction:
    def test_indicator(self):
        s = ob.WeightedSamples(np.array([1.0, 1.0, 0.0, 0.0]), np.full(4, 0.25))
        assert ob.distribution_function(s, 0.0) == 0.5
        assert ob.distribution_function(s, 0.5) == 0.5
        assert ob.distribution_function(s, 1.0) == 0.0

    def test_constant(self):
        s = ob.WeightedSamples(np.full(10, 2.0), np.full(10, 0.3))
        v_total = 3.0
        assert math.isclose(ob.distribution_function(s, 1.0), v_total)
        assert ob.distribution_function(s, 2.0) == 0.0

    def test_linear_profile(self):
        n = 1000
        x = (np.arange(n) + 0.5) / n
        s = ob.WeightedSamples(x, np.full(n, 1.0 / n))
        for sigma in (0.1, 0.33, 0.5, 0.9):
            assert abs(ob.distribution_function(s, sigma) - (1 - sigma)) <= 2.0 / n

    def test_monotone_in_alpha(self, rng):
        s = random_samples(rng)
        alphas = np.sort(rng.uniform(0, np.abs(s.values).max() * 1.1, 20))
        d = [ob.distribution_function(s, a) for a in alphas]
        assert all(x >= y for x, y in zip(d, d[1:]))

    def test_negative_alpha_rejected(self):
        s = ob.WeightedSamples(np.array([1.0]), np.array([1.0]))
        with pytest.raises(ValueError):
            ob.distribution_function(s, -0.1)


class TestWeakNorm:
    def test_constant(self):
        s = ob.WeightedSamples(np.full(8, 3.0), np.full(8, 0.5))
        assert math.isclose(ob.weak_lp_norm(s, 2.0), 3.0 * 2.0)  # |c| V^(1/2)

    def test_exact_dyadic_homogeneity(self, rng):
        for _ in range(20):
            s = random_samples(rng)
            lam = float(rng.choice([0.25, 0.5, 2.0, 4.0, -8.0]))
            scaled = ob.WeightedSamples(lam * s.values, s.weights)
            for p in (1.0, 2.0, 3.5):
                assert ob.weak_lp_norm(scaled, p) == abs(lam) * ob.weak_lp_norm(s, p)

    def test_general_homogeneity_close(self, rng):
        s = random_samples(rng)
        lam = 1.7305
        scaled = ob.WeightedSamples(lam * s.values, s.weights)
        got = ob.weak_lp_norm(scaled, 2.0)
        assert abs(got - lam * ob.weak_lp_norm(s, 2.0)) < 1e-14 * got

    def test_inverse_sqrt_profile(self):
        n = 4096
        x = (np.arange(n) + 1.0) / n  # samples of (0, 1]
        s = ob.WeightedSamples(x**-0.5, np.full(n, 1.0 / n))
        assert abs(ob.weak_lp_norm(s, 2.0) - 1.0) < 0.1

    def test_infinity_is_max(self, rng):
        s = random_samples(rng)
        assert ob.weak_lp_norm(s, math.inf) == np.abs(s.values).max()

    def test_zero_iff_zero(self):
        z = ob.WeightedSamples(np.zeros(5), np.full(5, 0.2))
        assert ob.weak_lp_norm(z, 2.0) == 0.0
        nz = ob.WeightedSamples(np.array([0.0, 1e-9]), np.array([1.0, 1.0]))
        assert ob.weak_lp_norm(nz, 2.0) > 0.0

    def test_p_below_one_rejected(self):
        s = ob.WeightedSamples(np.array([1.0]), np.array([1.0]))
        with pytest.raises(ValueError):
            ob.weak_lp_norm(s, 0.5)

    def test_against_brute_force(self, rng):
        for _ in range(20):
            s = random_samples(rng, size_range=(4, 64))
            for p in (1.0, 2.0, 3.5):
                assert math.isclose(
                    ob.weak_lp_norm(s, p), brute_weak_norm(s, p), rel_tol=1e-12
                )


class TestStrongNorm:
    def test_constant(self):
        s = ob.WeightedSamples(np.full(4, 1.3), np.full(4, 0.25))
        assert math.isclose(ob.lp_norm(s, 2.0), 1.3)

    def test_indicator(self):
        s = ob.WeightedSamples(np.array([1.0, 1.0, 0.0]), np.array([0.3, 0.4, 0.3]))
        for p in (1.0, 2.5, 7.0):
            assert math.isclose(ob.lp_norm(s, p), 0.7 ** (1.0 / p))

    def test_chebyshev_inclusion(self, rng):
        for _ in range(100):
            s = random_samples(rng)
            for p in (1.0, 2.0, 3.5):
                weak = ob.weak_lp_norm(s, p)
                strong = ob.lp_norm(s, p)
                assert weak <= strong * (1.0 + 1e-12)


class TestQuasiNormAxioms:
    def test_quasi_triangle_factor_two(self, rng):
        for _ in range(100):
            n = int(rng.integers(8, 256))
            w = rng.uniform(0.1, 1.0, n)
            f = ob.WeightedSamples(rng.standard_normal(n) * 3, w)
            g = ob.WeightedSamples(rng.standard_normal(n), w)
            fg = ob.WeightedSamples(f.values + g.values, w)
            for p in (1.0, 2.0):
                lhs = ob.weak_lp_norm(fg, p)
                rhs = 2.0 * (ob.weak_lp_norm(f, p) + ob.weak_lp_norm(g, p))
                assert lhs <= rhs * (1.0 + 1e-12)


class TestLayerCake:
    def test_indicator_p2(self):
        s = ob.WeightedSamples(np.array([1.0, 1.0, 0.0]), np.array([0.3, 0.4, 0.3]))
        assert math.isclose(ob.layer_cake(s, 2.0), 0.7)

    def test_linear_profile_matches_analytic(self):
        n = 1000
        x = (np.arange(n) + 0.5) / n
        s = ob.WeightedSamples(x, np.full(n, 1.0 / n))
        lc = ob.layer_cake(s, 2.0)
        assert abs(lc - 1.0 / 3.0) < 1e-4
        assert abs(lc - ob.lp_norm(s, 2.0) ** 2) < 1e-12

    def test_identity_on_random_samples(self, rng):
        for _ in range(30):
            s = random_samples(rng)
            for p in (1.0, 2.0, 3.5):
                lhs = ob.layer_cake(s, p)
                rhs = ob.lp_norm(s, p) ** p
                assert abs(lhs - rhs) <= 1e-10 * rhs

    def test_p_below_one_rejected(self):
        s = ob.WeightedSamples(np.array([1.0]), np.array([1.0]))
        with pytest.raises(ValueError):
            ob.layer_cake(s, 0.9)


class TestTimeSeries:
    def test_from_times_requires_increasing(self):
        with pytest.raises(ValueError):
            ob.TimeSeries.from_times([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])

    def test_trapezoid_weights_sum_to_duration(self):
        t = np.array([0.0, 0.1, 0.4, 1.0])
        ts = ob.TimeSeries.from_times(t, np.ones(4))
        assert math.isclose(ts.duration, 1.0)
        assert math.isclose(ts.integral(), 1.0)

    def test_cumulative_matches_integral(self):
        t = np.linspace(0.0, 2.0, 41)
        ts = ob.TimeSeries.from_times(t, t**2)
        cum = ts.cumulative()
        assert math.isclose(cum[-1], ts.integral(), rel_tol=1e-12)

    def test_weights_positive_enforced(self):
        with pytest.raises(ValueError):
            ob.TimeSeries(np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.array([1.0, 0.0]))


class TestBochnerNorms:
    def test_constant_series(self):
        ts = ob.TimeSeries.from_times(np.linspace(0, 2, 21), np.full(21, 3.0))
        for s in (1.0, 2.0, 4.0):
            expected = 3.0 * 2.0 ** (1.0 / s)
            assert math.isclose(ob.bochner_strong(ts, s), expected, rel_tol=1e-12)
            assert math.isclose(ob.bochner_weak_time(ts, s), expected, rel_tol=1e-12)

    def test_zero_series(self):
        ts = ob.TimeSeries.from_times([0.0, 1.0], [0.0, 0.0])
        assert ob.bochner_strong(ts, 2.0) == 0.0

    def test_linear_ramp_quadrature(self):
        n = 2001
        t = np.linspace(0.0, 1.0, n)
        ts = ob.TimeSeries.from_times(t, t)
        assert abs(ob.bochner_strong(ts, 2.0) - math.sqrt(1.0 / 3.0)) < 2.0 / n

    def test_single_spike(self):
        t = np.linspace(0.0, 1.0, 11)
        v = np.zeros(11)
        v[5] = 7.0
        ts = ob.TimeSeries.from_times(t, v)
        for s in (2.0, 3.0):
            assert math.isclose(ob.bochner_weak_time(ts, s), 7.0 * 0.1 ** (1.0 / s))

    def test_weak_below_strong(self, rng):
        t = np.sort(rng.uniform(0, 1, 50))
        t[0], t[-1] = 0.0, 1.0
        ts = ob.TimeSeries.from_times(t, rng.lognormal(0, 1, 50))
        for s in (1.0, 2.0, 5.0):
            assert ob.bochner_weak_time(ts, s) <= ob.bochner_strong(ts, s) * (1 + 1e-12)

    def test_rejects_bad_exponent(self):
        ts = ob.TimeSeries.from_times([0.0, 1.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            ob.bochner_strong(ts, 0.5)
        with pytest.raises(ValueError):
            ob.bochner_weak_time(ts, math.inf)


class TestInterpolationCheck:
    def test_formula_substitution(self):
        out = ob.interpolation_check(1.0, 1.0, math.inf, 2.0, 0.1)
        assert math.isclose(out.s_eps, 2.2)
        assert math.isclose(out.r_eps, 33.0)

    def test_small_eps_limit(self):
        u, grad = 1.7, 42.0
        out = ob.interpolation_check(u, grad, 6.0, 4.0, 1e-9)
        assert math.isclose(out.s_eps, 4.0, rel_tol=1e-8)
        assert math.isclose(out.rhs, u**4.0, rel_tol=1e-6)

    def test_eps_out_of_range_rejected(self):
        for eps in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                ob.interpolation_check(1.0, 1.0, 6.0, 4.0, eps)

    def test_invalid_pair_rejected(self):
        with pytest.raises(ValueError):
            ob.interpolation_check(1.0, 1.0, 6.0, 3.0, 0.1)

    def test_ratio_stable_under_amplitude(self, grid2, rng):
        from obflow import synth
        from obflow.monitor import interpolation_ratio, validate_pair

        pair = validate_pair(6.0, 4.0)
        base = synth.single_mode_div_free(grid2, (1, 2))
        ratios = []
        for _ in range(20):
            amp = float(rng.lognormal(0.0, 2.0))
            ratios.append(interpolation_ratio(amp * base, pair, 0.1))
        assert max(ratios) / min(ratios) < 10.0
