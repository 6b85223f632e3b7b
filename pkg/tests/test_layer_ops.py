"""Singular self-interaction and cross-interaction boundary operators."""

import numpy as np
import pytest

from contourdyn.geometry import InterfacePair, default_delta
from contourdyn.layer_ops import (
    double_layer_offcurve,
    interaction_inner_from_outer,
    interaction_outer_from_inner,
    singular_normal,
    singular_tangent,
)
from contourdyn.spectral import PeriodicField, hilbert

R_IN, R_OUT = 1.0, 1.5


def make_pair(n=64, h_amp=0.0, H_amp=0.0, k=2):
    th = PeriodicField.nodes(n)
    return InterfacePair(
        r=R_IN,
        R=R_OUT,
        delta=default_delta(R_IN, R_OUT),
        h=PeriodicField(h_amp * np.cos(k * th)),
        H=PeriodicField(H_amp * np.cos(k * th)),
    )


def harmonic(n, k, phase=0.0):
    th = PeriodicField.nodes(n)
    return PeriodicField(np.cos(k * th + phase))


class TestCircleExactness:
    """At h = H = 0 every operator has a closed Fourier-multiplier form."""

    N = 256

    @pytest.mark.parametrize("curve", ["inner", "outer"])
    @pytest.mark.parametrize("k", [1, 3, 7])
    def test_tangent_is_half_hilbert(self, curve, k):
        pair = make_pair(self.N)
        psi = harmonic(self.N, k, 0.3)
        out = singular_tangent(curve, pair, psi)
        expected = hilbert(psi) * 0.5
        assert (out - expected).sup_norm() < 1e-10

    @pytest.mark.parametrize("curve", ["inner", "outer"])
    def test_normal_is_minus_half_mean(self, curve):
        pair = make_pair(self.N)
        psi = harmonic(self.N, 4) + 0.8
        out = singular_normal(curve, pair, psi)
        np.testing.assert_allclose(out.samples, -0.8 / 2.0, atol=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_interactions_are_poisson_multipliers(self, k):
        pair = make_pair(self.N)
        psi = harmonic(self.N, k)
        s = (R_IN / R_OUT) ** k
        rad_io, tang_io = interaction_inner_from_outer(pair, psi)
        # radial parts scale mode k by -+ s^k / 2; the tangential parts are
        # + s^k / 2 times the Hilbert transform (odd Q-series)
        assert (rad_io - psi * (-0.5 * s)).sup_norm() < 1e-10
        assert (tang_io - hilbert(psi) * (0.5 * s)).sup_norm() < 1e-10
        rad_oi, tang_oi = interaction_outer_from_inner(pair, psi)
        assert (rad_oi - psi * (0.5 * s)).sup_norm() < 1e-10
        assert (tang_oi - hilbert(psi) * (0.5 * s)).sup_norm() < 1e-10

    def test_interaction_means(self):
        pair = make_pair(self.N)
        one = PeriodicField(np.ones(self.N))
        rad_io, tang_io = interaction_inner_from_outer(pair, one)
        np.testing.assert_allclose(rad_io.samples, 0.0, atol=1e-12)
        np.testing.assert_allclose(tang_io.samples, 0.0, atol=1e-12)
        rad_oi, tang_oi = interaction_outer_from_inner(pair, one)
        np.testing.assert_allclose(rad_oi.samples, 1.0, atol=1e-12)
        np.testing.assert_allclose(tang_oi.samples, 0.0, atol=1e-12)


class TestPerturbedConsistency:
    def test_tangent_converges_under_refinement(self):
        psi_fn = lambda th: np.cos(3 * th + 0.2)
        outs = []
        for n in (64, 128, 256):
            th = PeriodicField.nodes(n)
            pair = InterfacePair(
                r=R_IN,
                R=R_OUT,
                delta=default_delta(R_IN, R_OUT),
                h=PeriodicField(1e-2 * np.cos(2 * th)),
                H=PeriodicField.zeros(n),
            )
            out = singular_tangent("inner", pair, PeriodicField(psi_fn(th)))
            outs.append(out.samples[:: n // 64])
        e1 = np.max(np.abs(outs[0] - outs[2]))
        e2 = np.max(np.abs(outs[1] - outs[2]))
        assert e2 < e1 / 4 or e2 < 1e-12

    def test_slope_guard(self):
        n = 128
        th = PeriodicField.nodes(n)
        pair = InterfacePair(
            r=R_IN,
            R=R_OUT,
            delta=default_delta(R_IN, R_OUT),
            h=PeriodicField(1.6e-2 * np.cos(40 * th)),  # |h'| = 0.64 > 0.5
            H=PeriodicField.zeros(n),
        )
        with pytest.raises(ValueError):
            singular_tangent("inner", pair, harmonic(n, 1))
        with pytest.raises(ValueError):
            singular_normal("inner", pair, harmonic(n, 1))


class TestDoubleLayerOffcurve:
    def test_unit_density_jump(self):
        pair = make_pair(128)
        inside = double_layer_offcurve(
            "inner", pair, PeriodicField(np.ones(128)), (0.2, 0.1)
        )
        outside = double_layer_offcurve(
            "inner", pair, PeriodicField(np.ones(128)), (1.3, 0.0)
        )
        assert inside == pytest.approx(-1.0, abs=1e-10)
        assert outside == pytest.approx(0.0, abs=1e-10)

    def test_near_curve_point_rejected(self):
        pair = make_pair(128)
        with pytest.raises(ValueError):
            double_layer_offcurve(
                "inner", pair, PeriodicField(np.ones(128)), (0.9999, 0.0)
            )

    def test_harmonic_density_poisson_value(self):
        # on a circle of radius r, a mean-free harmonic density cos(k t)
        # gives -(1/2)(|x|/r)^k cos(k angle) inside (interior limit -psi/2)
        pair = make_pair(128)
        k = 3
        val = double_layer_offcurve(
            "inner", pair, harmonic(128, k), (0.5, 0.0)
        )
        assert val == pytest.approx(-0.5 * (0.5 / R_IN) ** k, abs=1e-8)
