"""Boundary-integral operators along and across the two interfaces.

``K_c`` denotes the principal-value vector kernel of a curve ``c``:

    K_c psi(theta) = (1/2pi) p.v. int (c(theta) - c(theta')) /
                     |c(theta) - c(theta')|^2 psi(theta') dtheta'

(and ``K_{c,d}`` the smooth cross-curve variant).  For a polar graph
``f = rr (1 + h)`` the two singular pairings decompose into closed rational
integrands (no series):

    2 pi gamma'^perp . K_gamma psi = L0 + L1 + L2 + L3
    2 pi gamma'     . K_gamma psi = L1~ + L2~ + L3~ + pi H psi

with ``Dh = (h(theta+xi) - h(theta)) / (2 sin(xi/2))`` and
``l = Dh^2 / ((1+h)(1+h_+))``.  The mean terms and the Hilbert transform are
applied spectrally (exact); the remaining integrands are regular after the
principal value is realized on the half-shifted grid ``xi_m = 2pi(m+1/2)/N``.

The smooth interactions are evaluated through exact scalar reductions of the
vector kernels: with ``P``/``Q`` the Poisson kernel pair and
``D = f(theta)/F(theta+xi)``, ``D' = f(theta+xi)/F(theta)``::

    f e_r     . K_{in,out} psi = (1/2pi) int (1/2 - P(D,xi)/2) psi_+ dxi
    f e_theta . K_{in,out} psi = -(1/4pi) int Q(D,xi) psi_+ dxi
    F e_r     . K_{out,in} psi = (1/4pi) int (1 + P(D',xi)) psi_+ dxi
    F e_theta . K_{out,in} psi = -(1/4pi) int Q(D',xi) psi_+ dxi
"""

from __future__ import annotations

import warnings

import numpy as np

from .kernels import eval_poisson
from .spectral import PeriodicField, derivative, hilbert, shifted_samples

__all__ = [
    "singular_normal",
    "singular_tangent",
    "interaction_inner_from_outer",
    "interaction_outer_from_inner",
    "double_layer_offcurve",
]


def _curve_data(curve, pair):
    if curve == "inner":
        return pair.h, pair.r
    if curve == "outer":
        return pair.H, pair.R
    raise ValueError(f"curve must be 'inner' or 'outer', got {curve!r}")


def _shift_matrices(h, psi):
    """Half-shifted quadrature data shared by both singular operators."""
    n = h.N
    xi = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    half_sin = 2.0 * np.sin(0.5 * xi)
    if np.any(np.abs(half_sin) <= 1e-8):
        raise ValueError("half-shifted grid degenerate: |2 sin(xi/2)| too small")
    hs = shifted_samples(h, 0.5)
    psis = shifted_samples(psi, 0.5)
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n  # (theta_j, xi_m)
    h_plus = hs[idx]
    psi_plus = psis[idx]
    h_here = h.samples[:, None]
    dh = (h_plus - h_here) / half_sin[None, :]
    ell = dh * dh / ((1.0 + h_here) * (1.0 + h_plus))
    return xi, half_sin, h_here, h_plus, psi_plus, dh, ell


def singular_normal(curve, pair, psi):
    """``gamma'^perp . K_gamma psi`` on the chosen curve via the L-decomposition."""
    h, _rr = _curve_data(curve, pair)
    if derivative(h).sup_norm() >= 0.5:
        raise ValueError("deviation slope too large for the singular quadrature")
    n = h.N
    dxi = 2.0 * np.pi / n
    xi, half_sin, h_here, h_plus, psi_plus, dh, ell = _shift_matrices(h, psi)
    hp = derivative(h).samples[:, None]

    one_plus_l = 1.0 + ell
    l0 = -np.pi * psi.mean()
    l1 = -0.5 * np.sum((ell / one_plus_l) * psi_plus, axis=1) * dxi
    l2 = (
        np.sum((dh / half_sin[None, :]) * psi_plus / one_plus_l, axis=1)
        * dxi
        / (1.0 + h.samples)
    )
    cot = np.cos(0.5 * xi) / half_sin  # 1 / (2 tan(xi/2))
    l3 = (
        np.sum((-hp * cot[None, :]) * psi_plus / one_plus_l, axis=1)
        * dxi
        / (1.0 + h.samples)
    )
    return PeriodicField((l0 + l1 + l2 + l3) / (2.0 * np.pi))


def singular_tangent(curve, pair, psi):
    """``gamma' . K_gamma psi`` on the chosen curve; equals ``H psi / 2`` at h = 0."""
    h, _rr = _curve_data(curve, pair)
    if derivative(h).sup_norm() >= 0.5:
        raise ValueError("deviation slope too large for the singular quadrature")
    n = h.N
    dxi = 2.0 * np.pi / n
    xi, half_sin, h_here, h_plus, psi_plus, dh, ell = _shift_matrices(h, psi)
    hp = derivative(h).samples
    one_plus_l = 1.0 + ell

    l1 = -0.5 * np.sum((ell / one_plus_l) * psi_plus, axis=1) * dxi
    lt1 = hp / (1.0 + h.samples) * (np.pi * psi.mean() + l1)
    lt2 = (
        -hp
        / (1.0 + h.samples)
        * np.sum((dh / half_sin[None, :]) / one_plus_l
                 * psi_plus / (1.0 + h_plus), axis=1)
        * dxi
    )
    cot = np.cos(0.5 * xi) / half_sin
    lt3 = np.sum((ell / one_plus_l) * psi_plus * cot[None, :], axis=1) * dxi
    rough = (lt1 + lt2 + lt3) / (2.0 * np.pi)
    return PeriodicField(rough) + hilbert(psi) * 0.5


def _interaction(pair, psi, from_outer):
    n = pair.N
    f = pair.f()
    big_f = pair.F()
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    xi = 2.0 * np.pi * np.arange(n) / n
    psi_plus = psi.samples[idx]
    if from_outer:
        s = f[:, None] / big_f[idx]  # D = f(theta) / F(theta+xi) < 1
        p, q = eval_poisson(s, xi[None, :])
        radial = np.sum((0.5 - 0.5 * p) * psi_plus, axis=1) / n
        tangential = -0.5 * np.sum(q * psi_plus, axis=1) / n
    else:
        s = f[idx] / big_f[:, None]  # D' = f(theta+xi) / F(theta) < 1
        p, q = eval_poisson(s, xi[None, :])
        radial = 0.5 * np.sum((1.0 + p) * psi_plus, axis=1) / n
        tangential = -0.5 * np.sum(q * psi_plus, axis=1) / n
    return PeriodicField(radial), PeriodicField(tangential)


def interaction_inner_from_outer(pair, psi):
    """``(f e_r . K_{in,out} psi, f e_theta . K_{in,out} psi)`` (smooth kernels)."""
    return _interaction(pair, psi, from_outer=True)


def interaction_outer_from_inner(pair, psi):
    """``(F e_r . K_{out,in} psi, F e_theta . K_{out,in} psi)`` (smooth kernels)."""
    return _interaction(pair, psi, from_outer=False)


def double_layer_offcurve(curve, pair, density, point):
    """Double-layer potential of ``density`` on the chosen curve at an off-curve point.

    Normalized so a unit density gives -1 inside the curve and 0 outside; the
    inside and outside limits at a curve point differ by ``-density`` there.
    """
    h, rr = _curve_data(curve, pair)
    n = h.N
    theta = PeriodicField.nodes(n)
    f = rr * (1.0 + h.samples)
    fp = rr * derivative(h).samples
    gamma = np.stack([f * np.cos(theta), f * np.sin(theta)], axis=-1)
    e_r = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    e_t = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    gamma_perp = -f[:, None] * e_r + fp[:, None] * e_t
    point = np.asarray(point, dtype=float)
    diff = point[None, :] - gamma
    dist2 = np.sum(diff * diff, axis=-1)
    min_dist = float(np.sqrt(np.min(dist2)))
    spacing = 2.0 * np.pi * float(np.min(f)) / n
    if min_dist <= spacing:
        raise ValueError("evaluation point is on or too close to the curve")
    if min_dist < 3.0 * spacing:
        warnings.warn(
            "double-layer evaluation within 3 grid spacings of the curve: "
            "accuracy degraded",
            stacklevel=2,
        )
    integrand = np.sum(diff * gamma_perp, axis=-1) / dist2 * density.samples
    return float(-np.sum(integrand) / n)
