"""Source-potential gradients on the interfaces."""

import numpy as np
import pytest
from scipy.integrate import quad

from contourdyn.geometry import InterfacePair, default_delta
from contourdyn.growth_potential import (
    QuadSpec,
    SourceField,
    _kernel_antiderivatives,
    grad_inner,
    grad_outer,
)
from contourdyn.kernels import eval_kj
from contourdyn.spectral import PeriodicField

R_IN, R_OUT = 1.0, 1.5


def unit_source():
    return SourceField.from_function(
        lambda rho, om: np.broadcast_arrays(0.0 * rho + 1.0, om)[0], R_IN
    )


def make_pair(n=64, h_amp=0.0, H_amp=0.0, k=2):
    th = PeriodicField.nodes(n)
    return InterfacePair(
        r=R_IN,
        R=R_OUT,
        delta=default_delta(R_IN, R_OUT),
        h=PeriodicField(h_amp * np.cos(k * th)),
        H=PeriodicField(H_amp * np.cos(k * th)),
    )


class TestQuadSpec:
    def test_w_nodes_weights_sum_to_one(self):
        quad_spec = QuadSpec(N_w=128, N_xi=512)
        w, weights = quad_spec.w_nodes()
        assert w.shape == weights.shape
        assert np.sum(weights) == pytest.approx(1.0, abs=1e-13)
        assert np.all((0.0 < w) & (w < 1.0))

    def test_refinement_clusters_nodes_near_one(self):
        coarse = QuadSpec(N_w=128, N_xi=512, refine_factor=1).w_nodes()[0]
        fine = QuadSpec(N_w=128, N_xi=512, refine_factor=8).w_nodes()[0]
        assert np.max(fine) > np.max(coarse)

    def test_xi_nodes_half_shifted_multiple(self):
        quad_spec = QuadSpec(N_w=64, N_xi=512)
        xi = quad_spec.xi_nodes(64)
        assert xi.size == 512
        assert xi[0] == pytest.approx(np.pi / 512)
        with pytest.raises(ValueError):
            quad_spec.xi_nodes(60)  # 512 is not a multiple of 60


class TestKernelAntiderivatives:
    @pytest.mark.parametrize("a", [0.3, 0.9, 1.0, 1.1])
    @pytest.mark.parametrize("xi", [0.3, 1.5, 2.8, 4.0, 5.9])
    def test_match_adaptive_integration(self, a, xi):
        a_k, a_j = _kernel_antiderivatives(np.array([a]), np.array([xi]))
        num_k, _ = quad(lambda t: eval_kj(t, xi)[0], 0.0, a, limit=200)
        num_j, _ = quad(lambda t: eval_kj(t, xi)[1], 0.0, a, limit=200)
        assert a_k[0] == pytest.approx(num_k, abs=1e-11)
        assert a_j[0] == pytest.approx(num_j, abs=1e-11)

    def test_vanish_at_zero(self):
        xi = np.array([0.7, 2.0])
        a_k, a_j = _kernel_antiderivatives(np.zeros(2), xi)
        np.testing.assert_allclose(a_k, 0.0, atol=1e-14)
        np.testing.assert_allclose(a_j, 0.0, atol=1e-14)


class TestCircleGradients:
    def test_unit_source_inner(self):
        # for g == 1 on the disc the potential gradient at rho = r is purely
        # radial with value -r/2; tangential vanishes
        pair = make_pair()
        tang, rad = grad_inner(pair, unit_source(), QuadSpec(N_w=128, N_xi=512))
        np.testing.assert_allclose(rad.samples, -R_IN / 2, atol=1e-10)
        np.testing.assert_allclose(tang.samples, 0.0, atol=1e-10)

    def test_unit_source_outer(self):
        # outside the disc: gradient magnitude r^2/(2 R), purely radial
        pair = make_pair()
        tang, rad = grad_outer(pair, unit_source(), QuadSpec(N_w=128, N_xi=512))
        np.testing.assert_allclose(
            rad.samples, -R_IN**2 / (2 * R_OUT), atol=1e-10
        )
        np.testing.assert_allclose(tang.samples, 0.0, atol=1e-10)


class TestPerturbedGradients:
    """First-order oracle: unit source on the region bounded by r(1+eps cos k)."""

    EPS, K = 1e-3, 2

    def fields(self, n_xi=512, n_w=128):
        pair = make_pair(h_amp=self.EPS, k=self.K)
        return pair, grad_inner(
            pair, unit_source(), QuadSpec(N_w=n_w, N_xi=n_xi)
        )

    def test_radial_constant_to_first_order(self):
        _, (tang, rad) = self.fields()
        assert np.max(np.abs(rad.samples + R_IN / 2)) < 10 * self.EPS**2

    def test_tangential_matches_linearization(self):
        pair, (tang, rad) = self.fields()
        th = PeriodicField.nodes(pair.N)
        exact = -(self.EPS * R_IN / 2) * np.sin(self.K * th)
        assert np.max(np.abs(tang.samples - exact)) < 10 * self.EPS**2

    def test_resolution_independence(self):
        _, (t1, r1) = self.fields(512, 128)
        _, (t2, r2) = self.fields(1024, 256)
        assert np.max(np.abs(t1.samples - t2.samples)) < 1e-9
        assert np.max(np.abs(r1.samples - r2.samples)) < 1e-9


class TestFluxTarget:
    def test_flux_constraint_enforced(self):
        pair = make_pair(h_amp=1e-3)
        target = 0.25
        tang, rad = grad_inner(
            pair, unit_source(), QuadSpec(N_w=64, N_xi=512), flux_target=target
        )
        # net outward volume flux through the curve:
        # int (-f * rad + f' * tang) dtheta = target
        from contourdyn.spectral import derivative

        f = PeriodicField(pair.f())
        fp = derivative(f)
        flux = float(
            np.sum((-f.samples * rad.samples + fp.samples * tang.samples))
            * 2.0
            * np.pi
            / pair.N
        )
        assert flux == pytest.approx(target, abs=1e-10)


class TestSourceField:
    def test_from_function_sampling(self):
        sf = SourceField.from_function(
            lambda rho, om: np.broadcast_arrays(rho, om)[0] ** 2, R_IN
        )
        out = sf.sample(np.array([[0.5, 1.0]]), np.array([[0.0], [1.0]]))
        np.testing.assert_allclose(out, [[0.25, 1.0], [0.25, 1.0]])
