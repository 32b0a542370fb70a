"""Baseline fitting, residuals, windowed and corrected readings."""

import numpy as np
import pytest

from hoyerstream import (
    BaselineModel,
    DimensionError,
    MixedSignWarning,
    NoiseSpec,
    corrected_reading,
    fit_baseline,
    hoyer_index,
    make_dense_anomaly,
    make_sparse_anomaly,
    monitor_series,
    residual,
    sample_noise,
    simulate_residual_stream,
    windowed_index,
    windowed_reading,
)

SPARSE_H = 0.7819222273431695


def noisy_frames(mu, sigma, count, seed):
    spec = NoiseSpec(sigma, seed)
    return [mu + sample_noise(*mu.shape, spec, k) for k in range(count)]


class TestFitBaseline:
    def test_identical_integer_frames(self):
        frame = np.arange(12.0).reshape(3, 4)
        b = fit_baseline([frame.copy() for _ in range(5)])
        assert np.array_equal(b.mu0_hat, frame)
        assert b.sigma2_hat == 0.0
        assert b.w0 == 5

    def test_identical_float_frames_near_zero_variance(self):
        frame = np.full((4, 4), 0.1)
        b = fit_baseline([frame.copy() for _ in range(7)])
        assert b.sigma2_hat < 1e-28

    def test_two_scalar_frames_hand_oracle(self):
        # Residuals -1, +1 about the mean 1; pooled variance 2/(2*1 - 1) = 2,
        # deflation factor w0/(w0-1) = 2 brings sigma2_hat to 4.
        b = fit_baseline([np.array([[0.0]]), np.array([[2.0]])])
        assert np.array_equal(b.mu0_hat, np.array([[1.0]]))
        raw_pooled = ((0.0 - 1.0) ** 2 + (2.0 - 1.0) ** 2) / (2 * 1 - 1)
        assert b.sigma2_hat == raw_pooled * 2 / (2 - 1)
        assert b.sigma2_hat == 4.0

    def test_recovers_known_variance(self):
        # MC oracle over 20 seeded streams at the stream shape used for the
        # real-data style runs.
        mu = np.linspace(0.0, 50.0, 130 * 320).reshape(130, 320)
        sigma = 3.0
        estimates = []
        for seed in range(20):
            frames = simulate_residual_stream(
                np.ones((130, 320)), NoiseSpec(sigma, seed), n_ic=200, n_ooc=1
            )[:200]
            estimates.append(fit_baseline(frames + mu).sigma2_hat)
        mean_est = float(np.mean(estimates))
        assert abs(mean_est - 9.0) / 9.0 < 0.02
        # every individual stream is already well inside the band
        assert max(abs(e - 9.0) / 9.0 for e in estimates) < 0.02

    def test_uses_first_w0_frames(self):
        frames = [np.full((2, 2), float(k)) for k in range(6)]
        b = fit_baseline(frames, w0=4)
        assert b.w0 == 4
        assert np.array_equal(b.mu0_hat, np.full((2, 2), 1.5))

    def test_shift_linearity(self):
        frames = noisy_frames(np.zeros((8, 9)), 2.0, 12, seed=3)
        b0 = fit_baseline(frames)
        b1 = fit_baseline([f + 5.25 for f in frames])
        assert np.allclose(b1.mu0_hat, b0.mu0_hat + 5.25, atol=1e-12)
        assert b1.sigma2_hat == pytest.approx(b0.sigma2_hat, rel=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_baseline([np.ones((2, 2))])
        with pytest.raises(DimensionError):
            fit_baseline([np.ones((2, 2)), np.ones((2, 3))])
        with pytest.raises(DimensionError):
            fit_baseline([])
        with pytest.raises(ValueError):
            fit_baseline([np.ones((2, 2))] * 3, w0=5)

    def test_baseline_mean_is_read_only(self):
        b = fit_baseline([np.zeros((2, 2)), np.ones((2, 2))])
        with pytest.raises(ValueError):
            b.mu0_hat[0, 0] = 9.0


class TestResidual:
    def test_zero_on_mean(self):
        b = fit_baseline([np.full((3, 3), 2.0)] * 2)
        assert np.array_equal(residual(np.full((3, 3), 2.0), b), np.zeros((3, 3)))

    def test_recovers_additive_shift_exactly(self):
        mu = np.arange(6.0).reshape(2, 3)
        b = fit_baseline([mu.copy() for _ in range(3)])
        a = make_dense_anomaly(2, 3)
        assert np.array_equal(residual(mu + a, b), a)

    def test_reconstruction_bit_exact_in_safe_range(self, rng):
        # Entries in [1, 2) keep x - mu and (x - mu) + mu exact (Sterbenz).
        mu = 1.0 + rng.random((5, 7))
        x = 1.0 + rng.random((5, 7))
        b = fit_baseline([mu.copy() for _ in range(2)])
        assert np.array_equal(residual(x, b) + b.mu0_hat, x)

    def test_shape_mismatch(self):
        b = fit_baseline([np.zeros((2, 2))] * 2)
        with pytest.raises(DimensionError):
            residual(np.zeros((2, 3)), b)


class TestWindowedIndex:
    def test_single_noise_free_frame(self):
        a = make_sparse_anomaly(100, 200)
        mu = np.full((100, 200), 4.0)
        b = fit_baseline([mu.copy() for _ in range(2)])
        assert windowed_index([mu + a], b) == hoyer_index(a)

    def test_frames_equal_to_mean_read_blank(self):
        mu = np.full((3, 4), 1.25)
        b = fit_baseline([mu.copy() for _ in range(2)])
        assert windowed_index([mu.copy(), mu.copy()], b) == 1.0

    @pytest.mark.parametrize("kind", ["dense", "sparse"])
    def test_error_decreases_with_window(self, kind):
        # Median absolute error over 5 seeded streams, windows 1/10/100/1000.
        maker = make_dense_anomaly if kind == "dense" else make_sparse_anomaly
        a = maker(100, 200)
        h_true = hoyer_index(a)
        mu = np.zeros((100, 200))
        b = BaselineModel(mu0_hat=mu, sigma2_hat=4.0, w0=2)
        widths = [1, 10, 100, 1000]
        medians = []
        for w in widths:
            errs = []
            for seed in range(5):
                frames = simulate_residual_stream(
                    a, NoiseSpec(2.0, 1000 + seed), n_ic=1, n_ooc=w
                )[1:]
                errs.append(abs(windowed_index(frames, b) - h_true))
            medians.append(float(np.median(errs)))
        assert all(m2 < m1 for m1, m2 in zip(medians, medians[1:])), medians

    def test_empty_window(self):
        b = fit_baseline([np.zeros((2, 2))] * 2)
        with pytest.raises(DimensionError):
            windowed_index([], b)


class TestCorrectedReading:
    def test_zero_variance_reduces_to_raw_index(self):
        a = make_sparse_anomaly(100, 200)
        mu = np.full((100, 200), 3.0)
        b = fit_baseline([mu.copy() for _ in range(3)])
        assert b.sigma2_hat == 0.0
        r = corrected_reading(mu + a, b)
        assert r.bias == 0.0
        assert r.g == r.h_raw == hoyer_index(a)
        assert r.g == pytest.approx(SPARSE_H, abs=1e-9)

    def test_no_anomaly_reads_near_one_in_literal_mode(self):
        mu = np.zeros((100, 200))
        frames = simulate_residual_stream(
            np.ones((100, 200)), NoiseSpec(4.0, 77), n_ic=60, n_ooc=1
        )[:60]
        b = fit_baseline(frames[:50])
        r = corrected_reading(frames[55], b, mode="literal")
        assert r.h_raw > 0.97
        assert r.bias < 0.01
        assert r.g > 0.97

    def test_dense_high_noise_debias_accuracy(self):
        # One full stream at the highest noise level of the sweep: the mean
        # absolute error of the corrected value stays under 0.08.
        a = make_dense_anomaly(100, 200)
        h_true = hoyer_index(a)
        frames = simulate_residual_stream(a, NoiseSpec(6.0, 2024), n_ic=200, n_ooc=200)
        b = fit_baseline(frames[:200])
        errs = [
            abs(corrected_reading(frames[200 + i], b).g - h_true) for i in range(200)
        ]
        assert float(np.mean(errs)) < 0.08

    def test_reading_fields_consistent(self):
        a = make_dense_anomaly(50, 60)
        b = BaselineModel(np.zeros((50, 60)), 1.0, 10)
        e = sample_noise(50, 60, NoiseSpec(1.0, 8))
        r = corrected_reading(a + e, b, t=17)
        assert r.t == 17
        assert r.g_unclamped == r.h_raw - r.bias
        assert r.g == min(max(r.g_unclamped, 0.0), 1.0)
        assert 0.0 <= r.g <= 1.0

    def test_mixed_sign_residual_warns(self):
        b = BaselineModel(np.zeros((40, 40)), 1.0, 10)
        e = sample_noise(40, 40, NoiseSpec(1.0, 5))
        with pytest.warns(MixedSignWarning):
            corrected_reading(e, b)

    def test_one_sided_residual_does_not_warn(self, recwarn):
        import warnings

        b = BaselineModel(np.zeros((100, 200)), 1.0, 10)
        with warnings.catch_warnings():
            warnings.simplefilter("error", MixedSignWarning)
            corrected_reading(make_dense_anomaly(100, 200), b)


class TestWindowedReading:
    def test_effective_variance_is_scaled(self):
        a = make_dense_anomaly(100, 200)
        b = BaselineModel(np.zeros((100, 200)), 9.0, 10)
        frames = [a + sample_noise(100, 200, NoiseSpec(3.0, 50), k) for k in range(9)]
        r = windowed_reading(frames, b)
        assert r.moments.sigma2 == 1.0  # 9.0 / 9 frames
        single = corrected_reading(frames[0], b)
        assert single.moments.sigma2 == 9.0
        assert r.bias < single.bias

    def test_matches_manual_average(self):
        a = make_sparse_anomaly(20, 30)
        b = BaselineModel(np.zeros((20, 30)), 4.0, 10)
        frames = [a + sample_noise(20, 30, NoiseSpec(2.0, 51), k) for k in range(4)]
        r = windowed_reading(frames, b, t=3)
        avg = np.mean(frames, axis=0)
        manual = corrected_reading(
            avg, BaselineModel(np.zeros((20, 30)), 1.0, 10), t=3
        )
        assert r.h_raw == manual.h_raw
        assert r.bias == manual.bias


class TestMonitorSeries:
    def make_stream(self, sigma=0.5, n_ic=30, n_ooc=30, seed=11):
        a = make_dense_anomaly(100, 200)
        frames = simulate_residual_stream(a, NoiseSpec(sigma, seed), n_ic, n_ooc)
        return a, frames

    def test_change_point_profile_literal(self):
        a, frames = self.make_stream()
        b = fit_baseline(frames[:30])
        readings = monitor_series(frames, b, range(0, 60), mode="literal")
        h_true = hoyer_index(a)
        pre = [r.g for r in readings[:30]]
        post = [r.g for r in readings[30:]]
        assert min(pre) > 0.9
        assert max(abs(g - h_true) for g in post) < 0.05

    def test_singleton_matches_corrected_reading(self):
        _, frames = self.make_stream()
        b = fit_baseline(frames[:30])
        series = monitor_series(frames, b, range(42, 43))
        direct = corrected_reading(frames[42], b, t=42)
        assert series[0] == direct

    def test_t_offset_labels(self):
        _, frames = self.make_stream(n_ic=5, n_ooc=5)
        b = fit_baseline(frames[:5])
        series = monitor_series(frames, b, range(3, 7), t_offset=1)
        assert [r.t for r in series] == [4, 5, 6, 7]

    def test_empty_range(self):
        _, frames = self.make_stream(n_ic=5, n_ooc=5)
        b = fit_baseline(frames[:5])
        assert monitor_series(frames, b, range(0)) == []

    def test_out_of_range_rejected(self):
        _, frames = self.make_stream(n_ic=5, n_ooc=5)
        b = fit_baseline(frames[:5])
        with pytest.raises(IndexError):
            monitor_series(frames, b, [10])
        with pytest.raises(IndexError):
            monitor_series(frames, b, [-1])

    def test_bit_identical_reruns(self):
        _, frames = self.make_stream(n_ic=10, n_ooc=10)
        b = fit_baseline(frames[:10])
        s1 = monitor_series(frames, b, range(0, 20))
        s2 = monitor_series(frames, b, range(0, 20))
        assert s1 == s2
