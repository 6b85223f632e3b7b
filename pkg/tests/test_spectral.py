"""Spectral grid utilities: transforms, multipliers, and resampling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contourdyn.spectral import (
    PeriodicField,
    dealias,
    derivative,
    evaluate_at,
    frac_laplacian_half,
    hilbert,
    poisson_smooth,
    resample,
    shifted_samples,
)


def trig(n, k, a=1.0, b=0.0):
    th = PeriodicField.nodes(n)
    return PeriodicField(a * np.cos(k * th) + b * np.sin(k * th))


fields = st.builds(
    lambda n, seed: PeriodicField(
        np.random.default_rng(seed).standard_normal(n)
    ),
    st.sampled_from([8, 16, 64]),
    st.integers(0, 2**31),
)


class TestPeriodicField:
    def test_rejects_odd_or_tiny_grids(self):
        with pytest.raises(ValueError):
            PeriodicField(np.zeros(7))
        with pytest.raises(ValueError):
            PeriodicField(np.zeros(4))

    def test_immutable(self):
        f = PeriodicField.zeros(8)
        with pytest.raises(AttributeError):
            f.samples = np.ones(8)
        with pytest.raises(ValueError):
            f.samples[0] = 1.0

    def test_mode_amplitude_of_cosine(self):
        f = trig(32, 3, a=0.25)
        assert f.mode_amplitude(3) == pytest.approx(0.25, abs=1e-14)
        assert f.mode_amplitude(2) == pytest.approx(0.0, abs=1e-14)

    def test_mode_returns_half_amplitude(self):
        f = trig(32, 2, a=1.0)
        assert f.mode(2) == pytest.approx(0.5)

    def test_coeffs_round_trip(self):
        rng = np.random.default_rng(0)
        f = PeriodicField(rng.standard_normal(16))
        g = PeriodicField.from_coeffs(f.coeffs(), 16)
        np.testing.assert_allclose(g.samples, f.samples, atol=1e-14)

    @given(fields)
    @settings(max_examples=25, deadline=None)
    def test_remove_mean_is_mean_free(self, f):
        assert abs(f.remove_mean().mean()) < 1e-12 * max(1.0, f.sup_norm())

    def test_arithmetic(self):
        f = trig(16, 1)
        g = trig(16, 2)
        np.testing.assert_allclose(
            (f + g - f * 2.0 + 1.0).samples,
            g.samples - f.samples + 1.0,
            atol=1e-14,
        )
        np.testing.assert_allclose(
            (f / (g + 3.0)).samples, f.samples / (g.samples + 3.0)
        )

    def test_mismatched_grids_rejected(self):
        with pytest.raises(ValueError):
            trig(16, 1) + trig(32, 1)


class TestOperators:
    def test_derivative_of_cosine(self):
        f = trig(64, 3)
        th = PeriodicField.nodes(64)
        np.testing.assert_allclose(
            derivative(f).samples, -3.0 * np.sin(3 * th), atol=1e-12
        )

    def test_derivative_kills_nyquist(self):
        n = 16
        f = trig(n, n // 2)
        assert derivative(f).sup_norm() < 1e-13

    def test_hilbert_multiplier(self):
        # -i sgn(k): cos -> sin, sin -> -cos
        n = 64
        th = PeriodicField.nodes(n)
        f = PeriodicField(np.cos(2 * th))
        np.testing.assert_allclose(hilbert(f).samples, np.sin(2 * th), atol=1e-13)
        g = PeriodicField(np.sin(5 * th))
        np.testing.assert_allclose(hilbert(g).samples, -np.cos(5 * th), atol=1e-13)

    @given(fields)
    @settings(max_examples=25, deadline=None)
    def test_hilbert_squares_to_minus_identity_on_mean_free(self, f):
        g = dealias(f.remove_mean())  # drop Nyquist so H^2 = -1 exactly
        np.testing.assert_allclose(
            hilbert(hilbert(g)).samples, -g.samples, atol=1e-10
        )

    def test_frac_laplacian_half_multiplier(self):
        f = trig(32, 4)
        np.testing.assert_allclose(
            frac_laplacian_half(f).samples, 4.0 * f.samples, atol=1e-12
        )

    def test_poisson_smooth_scales_modes(self):
        f = trig(32, 3)
        s = 0.5
        np.testing.assert_allclose(
            poisson_smooth(f, s).samples, s**3 * f.samples, atol=1e-13
        )

    def test_poisson_smooth_preserves_mean(self):
        f = trig(32, 2) + 1.25
        assert poisson_smooth(f, 0.5).mean() == pytest.approx(1.25)

    def test_dealias_drops_top_third(self):
        n = 48
        keep = trig(n, 4)
        killed = trig(n, 20)
        out = dealias(keep + killed)
        np.testing.assert_allclose(out.samples, keep.samples, atol=1e-12)


class TestSampling:
    def test_shifted_samples_of_cosine(self):
        n = 32
        f = trig(n, 2)
        th = PeriodicField.nodes(n, shift=0.5)
        np.testing.assert_allclose(shifted_samples(f, 0.5), np.cos(2 * th), atol=1e-12)

    def test_resample_up_then_down_is_identity(self):
        f = trig(16, 3) + trig(16, 5)
        g = resample(resample(f, 64), 16)
        np.testing.assert_allclose(g.samples, f.samples, atol=1e-12)

    def test_resample_up_interpolates(self):
        f = trig(16, 3)
        up = resample(f, 64)
        th = PeriodicField.nodes(64)
        np.testing.assert_allclose(up.samples, np.cos(3 * th), atol=1e-12)

    def test_evaluate_at_arbitrary_points(self):
        f = trig(32, 4)
        pts = np.array([0.1, 1.7, 5.5])
        np.testing.assert_allclose(evaluate_at(f, pts), np.cos(4 * pts), atol=1e-12)
