import numpy as np
import pytest

from usqz.errors import DegenerateSample
from usqz.grid import PolarFrame, ProbeGeometry
from usqz.speckle import (CHANNEL_NAMES, feature_map, inverse_log_compression,
                          nakagami_fit, write_feature_stack)
from usqz.synth import log_compress


class TestNakagamiFit:
    def test_rayleigh_monte_carlo(self):
        # Rayleigh(sigma=1): m = 1, omega = E[x^2] = 2 sigma^2 = 2
        rng = np.random.default_rng(42)
        x = rng.rayleigh(scale=1.0, size=100_000)
        params = nakagami_fit(x)
        assert 0.95 <= params.m <= 1.05
        assert 1.9 <= params.omega <= 2.1

    def test_constant_samples_degenerate(self):
        with pytest.raises(DegenerateSample):
            nakagami_fit([5.0] * 100)

    def test_too_few_samples(self):
        with pytest.raises(DegenerateSample):
            nakagami_fit([1.0, 2.0, 3.0])

    def test_scale_homogeneity(self):
        rng = np.random.default_rng(7)
        x = rng.rayleigh(scale=2.0, size=5000)
        a = nakagami_fit(x)
        b = nakagami_fit(3.0 * x)
        assert b.m == pytest.approx(a.m, rel=1e-12)
        assert b.omega == pytest.approx(9.0 * a.omega, rel=1e-12)

    def test_m_converges_within_tolerance_at_1e5(self):
        rng = np.random.default_rng(2024)
        assert abs(nakagami_fit(rng.rayleigh(1.0, 100_000)).m - 1.0) <= 0.05


class TestInverseLogCompression:
    def test_inverts_display_mapping(self):
        env = np.linspace(1e-2, 1.0, 1000).reshape(10, 100)
        eight_bit = log_compress(env, 50.0)
        recovered = inverse_log_compression(eight_bit, 50.0)
        # quantization-limited round trip on the normalized scale
        assert np.allclose(recovered, env / env.max(), rtol=0.05)

    def test_endpoints(self):
        assert inverse_log_compression(np.array([255]), 50.0)[0] == pytest.approx(1.0)
        assert inverse_log_compression(np.array([0]), 50.0)[0] == pytest.approx(10 ** -2.5)


def _rayleigh_frame(geometry, sigma_map, rng, dyn=50.0):
    env = rng.rayleigh(scale=sigma_map, size=geometry.polar_shape)
    return PolarFrame(geometry, log_compress(env, dyn))


class TestFeatureMap:
    def test_uniform_frame_imputed_constant(self, small_geometry):
        frame = PolarFrame(small_geometry,
                           np.full(small_geometry.polar_shape, 100, np.uint8))
        stack = feature_map(frame, window=5)
        m, log_omega, mean_amp = stack.channels
        assert np.all(m == m[0, 0])
        assert np.allclose(mean_amp, mean_amp[0, 0])
        assert np.all(np.isfinite(stack.channels))

    def test_two_band_separation(self, geometry):
        # Rayleigh sigma 1 inner / sigma 3 outer: log-omega separates bands
        rng = np.random.default_rng(11)
        sigma = np.where(np.arange(geometry.samples_per_line)[:, None] < 192, 1.0, 3.0)
        frame = _rayleigh_frame(geometry, sigma, rng)
        stack = feature_map(frame, window=9)
        log_omega = stack.channels[1]
        inner = log_omega[64:128].mean()
        outer = log_omega[256:320].mean()
        # omega ratio is 9x; require at least 4x away from the boundary
        assert outer - inner >= np.log(4.0)

    def test_window_size_invariant_in_constant_regions(self, small_geometry):
        rng = np.random.default_rng(5)
        frame = PolarFrame(small_geometry,
                           np.full(small_geometry.polar_shape, 137, np.uint8))
        s3 = feature_map(frame, window=3)
        s9 = feature_map(frame, window=9)
        assert np.allclose(s3.channels[2], s9.channels[2])

    def test_theta_translation_equivariance(self, small_geometry):
        rng = np.random.default_rng(3)
        samples = rng.integers(0, 256, size=small_geometry.polar_shape).astype(np.uint8)
        shift = 13
        stack = feature_map(PolarFrame(small_geometry, samples), window=5)
        rolled = feature_map(
            PolarFrame(small_geometry, np.roll(samples, shift, axis=1)), window=5)
        assert np.allclose(rolled.channels, np.roll(stack.channels, shift, axis=2),
                           rtol=1e-10, atol=1e-12)

    def test_no_nan_inf_on_extreme_frames(self, small_geometry):
        for value in (0, 255):
            frame = PolarFrame(small_geometry,
                               np.full(small_geometry.polar_shape, value, np.uint8))
            assert np.all(np.isfinite(feature_map(frame, 3).channels))
        rng = np.random.default_rng(9)
        salt = (rng.random(small_geometry.polar_shape) < 0.5).astype(np.uint8) * 255
        assert np.all(np.isfinite(feature_map(PolarFrame(small_geometry, salt), 3).channels))

    def test_even_window_rejected(self, small_geometry):
        frame = PolarFrame(small_geometry,
                           np.zeros(small_geometry.polar_shape, np.uint8))
        with pytest.raises(ValueError):
            feature_map(frame, window=4)


class TestBackendAgreement:
    def test_compiled_matches_numpy(self, small_geometry):
        from usqz import _moments_py
        try:
            from usqz import _moments
        except ImportError:
            pytest.skip("compiled backend not built")
        rng = np.random.default_rng(17)
        amp = rng.random(small_geometry.polar_shape)
        for window in (3, 5, 9):
            ours = _moments.window_moment_sums(np.ascontiguousarray(amp), window)
            ref = _moments_py.window_moment_sums(amp, window)
            for a, b in zip(ours, ref):
                assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


class TestExport:
    def test_sidecar_and_raw(self, small_geometry, tmp_path):
        frame = PolarFrame(small_geometry,
                           np.full(small_geometry.polar_shape, 90, np.uint8))
        stack = feature_map(frame, window=3)
        base = str(tmp_path / "stack")
        write_feature_stack(stack, base)
        raw = np.fromfile(base + ".raw", dtype="<f4")
        assert raw.size == 3 * np.prod(small_geometry.polar_shape)
        sidecar = (tmp_path / "stack.txt").read_text()
        for name in CHANNEL_NAMES:
            assert name in sidecar
