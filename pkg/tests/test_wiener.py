import numpy as np
import pytest
import scipy.linalg

from pfkf_aec.errors import NumericalError, ParameterError
from pfkf_aec.signals import Scene, design_coloring_filter, fir_filter, gen_white_noise, make_rng
from pfkf_aec.wiener import (
    CorrelationModel,
    analytic_correlations,
    estimate_correlations,
    levinson_solve,
    solve_wiener,
)


def random_spd_toeplitz(rng, n):
    # autocorrelation of a random MA process is positive definite
    h = rng.standard_normal(5)
    r = np.correlate(h, h, "full")[4:]
    return np.r_[r, np.zeros(max(0, n - r.size))][:n] + np.r_[0.1, np.zeros(n - 1)]


class TestEstimate:
    def test_zeros(self):
        m = estimate_correlations(np.zeros(100), np.zeros(100), 4)
        assert not np.any(m.autocorr) and not np.any(m.crosscorr)
        with pytest.raises(NumericalError):
            solve_wiener(m)

    def test_white_noise(self):
        T = 200000
        x = gen_white_noise(make_rng(0), T, 2.0)
        m = estimate_correlations(x, x, 16)
        assert abs(m.autocorr[0] - 2.0) < 3 * 2.0 / np.sqrt(T) * np.sqrt(2) + 0.01
        assert np.max(np.abs(m.autocorr[1:])) < 3 * 2.0 / np.sqrt(T) * 2

    def test_matches_direct_sum(self, rng):
        x = rng.standard_normal(300)
        y = rng.standard_normal(300)
        m = estimate_correlations(x, y, 10)
        for i in range(10):
            assert np.isclose(m.autocorr[i], np.dot(x[i:], x[: 300 - i]) / 300)
            assert np.isclose(m.crosscorr[i], np.dot(y[i:], x[: 300 - i]) / 300)

    def test_cross_correlation_identity(self):
        rng = make_rng(5)
        x = gen_white_noise(rng, 400000)
        w0 = rng.standard_normal(6)
        sc = Scene.build(x, w0, rng, 30.0)
        m = estimate_correlations(x, sc.microphone, 8)
        expect = [sum(w0[j] * m.autocorr[abs(i - j)] for j in range(6)) for i in range(8)]
        assert np.max(np.abs(m.crosscorr - expect)) < 0.01

    def test_too_short(self):
        with pytest.raises(ParameterError):
            estimate_correlations(np.ones(50), np.ones(50), 10)
        with pytest.raises(ParameterError):
            estimate_correlations(np.ones(50), np.ones(40), 2)


class TestAnalytic:
    def test_white(self, rng):
        w0 = rng.standard_normal(20)
        m = analytic_correlations([1.0], w0, 0.1, 12)
        assert np.array_equal(m.autocorr, np.r_[1.0, np.zeros(11)])
        assert np.allclose(m.crosscorr, w0[:12])

    def test_two_tap(self):
        m = analytic_correlations([1.0, 1.0], [1.0], 0.0, 5)
        assert np.array_equal(m.autocorr, [2.0, 1.0, 0.0, 0.0, 0.0])

    def test_monte_carlo_illustrating_scene(self):
        lp = design_coloring_filter("lowpass4")
        hp = design_coloring_filter("highpass512")
        rng = make_rng(11)
        x = fir_filter(gen_white_noise(rng, 10**6), lp)
        sc = Scene.build(x, hp, rng, 20.0)
        est = estimate_correlations(x, sc.microphone, 256)
        ana = analytic_correlations(lp, hp, sc.noise_variance, 256)
        assert np.max(np.abs(est.autocorr - ana.autocorr)) < 0.01 * np.max(np.abs(ana.autocorr))
        assert np.max(np.abs(est.crosscorr - ana.crosscorr)) < 0.01 * np.max(np.abs(ana.crosscorr))


class TestSolve:
    def test_white_reference_truncates_path(self, rng):
        w0 = rng.standard_normal(40)
        w = solve_wiener(analytic_correlations([1.0], w0, 0.0, 16))
        assert np.max(np.abs(w - w0[:16])) < 1e-10

    def test_scalar(self):
        assert np.isclose(solve_wiener(CorrelationModel([2.0], [3.0]))[0], 1.5)

    def test_levinson_matches_dense(self, rng):
        r = random_spd_toeplitz(rng, 8)
        b = rng.standard_normal(8)
        x, kmax = levinson_solve(r, b)
        assert kmax < 1
        assert np.max(np.abs(x - np.linalg.solve(scipy.linalg.toeplitz(r), b))) < 1e-10

    def test_sufficient_length_recovers_path(self):
        lp = design_coloring_filter("lowpass4")
        w0 = make_rng(2).standard_normal(30)
        w = solve_wiener(analytic_correlations(lp, w0, 0.0, 48))
        assert np.max(np.abs(w - np.r_[w0, np.zeros(18)])) < 1e-10

    def test_residual_illustrating(self):
        m = analytic_correlations(design_coloring_filter("lowpass4"),
                                  design_coloring_filter("highpass512"), 0.0, 256)
        w = solve_wiener(m)
        res = np.linalg.norm(m.toeplitz() @ w - m.crosscorr) / np.linalg.norm(m.crosscorr)
        assert res < 1e-8

    def test_cholesky_fallback(self, caplog):
        # exactly singular leading minor: Levinson stops, Cholesky also fails
        m = CorrelationModel([1.0, 1.0, 1.0], [1.0, 0.0, 0.0])
        with pytest.raises(NumericalError, match="cond"):
            solve_wiener(m)

    def test_fallback_used_when_recursion_breaks(self, monkeypatch, rng):
        import pfkf_aec.wiener as wz

        monkeypatch.setattr(wz, "REFLECTION_LIMIT", 0.0)
        r = random_spd_toeplitz(rng, 8)
        b = rng.standard_normal(8)
        w = solve_wiener(CorrelationModel(r, b))
        assert np.max(np.abs(w - np.linalg.solve(scipy.linalg.toeplitz(r), b))) < 1e-10

    def test_mse_optimal_on_held_out_data(self):
        lp = design_coloring_filter("lowpass4")
        hp = design_coloring_filter("highpass512")
        rng = make_rng(21)
        w = solve_wiener(analytic_correlations(lp, hp, 0.0, 256))
        x = fir_filter(gen_white_noise(rng, 400000), lp)
        sc = Scene.build(x, hp, rng, 20.0)

        def mse(v):
            return np.mean((sc.microphone - fir_filter(x, v)) ** 2)

        base = mse(w)
        for _ in range(100):
            d = rng.standard_normal(256)
            d *= 0.01 * np.linalg.norm(w) / np.linalg.norm(d)
            assert base <= mse(w + d)

    def test_model_shape_check(self):
        with pytest.raises(ParameterError):
            CorrelationModel([1.0, 0.5], [1.0])
