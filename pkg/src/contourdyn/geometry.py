"""Interface geometry: nested interface pair, reference-domain diffeomorphism,
kernel arguments, smallness diagnostics, collision detection and re-referencing.

The two interfaces are the polar graphs ``f(theta) = r (1 + h(theta))`` (inner)
and ``F(theta) = R (1 + H(theta))`` (outer).  The reference map

    x(X) = [1 + h(omega) eta_delta(rho/r) + H(omega) eta_delta(rho/R)] X
         =: zeta(X) X

deforms the concentric reference annulus onto the physical domain; ``eta_delta``
is a C^2 bump equal to 1 on ``[1-delta, 1+delta]`` and supported on
``[1-2 delta, 1+2 delta]`` (quintic smoothstep shoulders).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import PeriodicField, derivative, evaluate_at

__all__ = [
    "GeometryError",
    "DegenerateMapError",
    "default_delta",
    "eta_delta",
    "eta_delta_prime",
    "eta_delta_second",
    "InterfacePair",
    "ReferenceMap",
    "kernel_args",
    "smallness_norms",
    "rereference",
    "needs_rereference",
    "collision_check",
]

# Re-referencing is triggered once a deviation mean exceeds this fraction of delta.
REREFERENCE_TRIGGER = 0.1


class GeometryError(ValueError):
    """Invalid interface-pair configuration."""


class DegenerateMapError(GeometryError):
    """The reference map is (numerically) non-invertible."""


def default_delta(r, R):
    """Mid-band cutoff half-width ``(R - r) / (20 R)``."""
    return (R - r) / (20.0 * R)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_prime(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)


def _smoothstep_second(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0)


def eta_delta(u, delta):
    """Cutoff profile: 1 on ``[1-delta, 1+delta]``, 0 outside ``[1-2d, 1+2d]``."""
    u = np.asarray(u, dtype=float)
    rising = _smoothstep((u - (1.0 - 2.0 * delta)) / delta)
    falling = _smoothstep((1.0 + 2.0 * delta - u) / delta)
    return np.minimum(rising, falling)


def eta_delta_prime(u, delta):
    u = np.asarray(u, dtype=float)
    up = _smoothstep_prime((u - (1.0 - 2.0 * delta)) / delta) / delta
    down = -_smoothstep_prime((1.0 + 2.0 * delta - u) / delta) / delta
    return np.where(u < 1.0, up, down)


def eta_delta_second(u, delta):
    u = np.asarray(u, dtype=float)
    up = _smoothstep_second((u - (1.0 - 2.0 * delta)) / delta) / delta**2
    down = _smoothstep_second((1.0 + 2.0 * delta - u) / delta) / delta**2
    return np.where(u < 1.0, up, down)


@dataclass(frozen=True)
class InterfacePair:
    """Nested interfaces ``f = r(1+h)`` and ``F = R(1+H)`` with cutoff width delta."""

    r: float
    R: float
    delta: float
    h: PeriodicField
    H: PeriodicField

    def __post_init__(self):
        if not 0.0 < self.r < self.R:
            raise GeometryError(f"need 0 < r < R, got r={self.r}, R={self.R}")
        band_lo = (self.R - self.r) / (100.0 * self.R)
        band_hi = (self.R - self.r) / (10.0 * self.R)
        if not band_lo <= self.delta <= band_hi:
            raise GeometryError(
                f"delta={self.delta:.6g} outside the admissible band "
                f"[{band_lo:.6g}, {band_hi:.6g}]"
            )
        if self.h.N != self.H.N:
            raise GeometryError("h and H must share a grid")
        size = (self.h.sup_norm() + self.H.sup_norm()) / self.delta
        if size >= 1.0:
            raise GeometryError(
                f"deviations too large for the cutoff width: "
                f"(|h|+|H|)/delta = {size:.3g} >= 1"
            )
        if collision_check(self) <= 0.0:
            raise GeometryError("interfaces cross or touch")

    @property
    def N(self):
        return self.h.N

    def f(self):
        """Inner interface radius samples ``r (1 + h)``."""
        return self.r * (1.0 + self.h.samples)

    def F(self):
        """Outer interface radius samples ``R (1 + H)``."""
        return self.R * (1.0 + self.H.samples)

    def f_prime(self):
        return self.r * derivative(self.h).samples

    def F_prime(self):
        return self.R * derivative(self.H).samples


def collision_check(pair):
    """Nesting margin ``min F - max f``; nonpositive means collision."""
    return float(np.min(pair.R * (1.0 + pair.H.samples))
                 - np.max(pair.r * (1.0 + pair.h.samples)))


def smallness_norms(pair):
    """Return ``(m0, M0)`` with ``m0 = |h|_inf/delta + |h'|_inf`` (and for H)."""
    hp = derivative(pair.h)
    Hp = derivative(pair.H)
    m0 = pair.h.sup_norm() / pair.delta + hp.sup_norm()
    M0 = pair.H.sup_norm() / pair.delta + Hp.sup_norm()
    return m0, M0


def needs_rereference(pair):
    """True once a deviation mean exceeds the trigger fraction of delta."""
    trig = REREFERENCE_TRIGGER * pair.delta
    return abs(pair.h.mean()) > trig or abs(pair.H.mean()) > trig


def rereference(pair):
    """Absorb the deviation means into new radii, keeping the curves fixed.

    ``r1 = mean f``, ``R1 = mean F``, ``h1 = f/r1 - 1``, ``H1 = F/R1 - 1`` and
    ``delta1 = delta (1 - r1/R1)/(1 - r/R)``.
    """
    r1 = pair.r * (1.0 + pair.h.mean())
    R1 = pair.R * (1.0 + pair.H.mean())
    h1 = PeriodicField(pair.r * (1.0 + pair.h.samples) / r1 - 1.0)
    H1 = PeriodicField(pair.R * (1.0 + pair.H.samples) / R1 - 1.0)
    delta1 = pair.delta * (1.0 - r1 / R1) / (1.0 - pair.r / pair.R)
    return InterfacePair(r=r1, R=R1, delta=delta1, h=h1, H=H1)


class ReferenceMap:
    """The radial diffeomorphism ``x(X) = zeta(X) X`` and its Jacobian data."""

    def __init__(self, pair):
        self.pair = pair

    # zeta and its derivatives ------------------------------------------------
    def eval_map(self, rho, omega):
        """Return ``(zeta, grad_zeta, rho_dzeta)`` at ``(rho, omega)``.

        ``grad_zeta`` has components along ``(e_r, e_theta)``:
        ``(d_rho zeta, (1/rho) d_omega zeta)``; ``rho_dzeta = rho * d_rho zeta``.
        """
        rho = np.asarray(rho, dtype=float)
        omega = np.asarray(omega, dtype=float)
        pair = self.pair
        h = evaluate_at(pair.h, omega)
        Hh = evaluate_at(pair.H, omega)
        hp = evaluate_at(derivative(pair.h), omega)
        Hp = evaluate_at(derivative(pair.H), omega)
        u_in = rho / pair.r
        u_out = rho / pair.R
        eta_in = eta_delta(u_in, pair.delta)
        eta_out = eta_delta(u_out, pair.delta)
        etap_in = eta_delta_prime(u_in, pair.delta)
        etap_out = eta_delta_prime(u_out, pair.delta)

        zeta = 1.0 + h * eta_in + Hh * eta_out
        dzeta_drho = h * etap_in / pair.r + Hh * etap_out / pair.R
        dzeta_domega = hp * eta_in + Hp * eta_out
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = np.where(rho > 0.0, dzeta_domega / np.maximum(rho, 1e-300), 0.0)
        grad = np.stack(np.broadcast_arrays(dzeta_drho, ang), axis=-1)
        rho_dzeta = rho * dzeta_drho
        return zeta, grad, rho_dzeta

    def jacobian_forward(self, rho, omega):
        """``dx/dX`` in the common ``(e_r, e_theta)`` frame (2x2, last axes)."""
        zeta, grad, rho_dzeta = self.eval_map(rho, omega)
        rho = np.asarray(rho, dtype=float)
        j00 = zeta + rho_dzeta
        j01 = rho * grad[..., 1]  # = d_omega zeta
        j10 = np.zeros_like(j00)
        j11 = zeta + np.zeros_like(j00)
        return np.stack(
            [np.stack([j00, j01], axis=-1), np.stack([j10, j11], axis=-1)],
            axis=-2,
        )

    def jacobian_det(self, rho, omega):
        """``det(dx/dX) = zeta (zeta + rho d_rho zeta)``."""
        zeta, _grad, rho_dzeta = self.eval_map(rho, omega)
        return zeta * (zeta + rho_dzeta)

    def jacobian_inverse(self, rho, omega):
        """``dX/dx`` in the ``(e_r, e_theta)`` frame; errors if degenerate."""
        zeta, grad, rho_dzeta = self.eval_map(rho, omega)
        det = zeta * (zeta + rho_dzeta)
        if np.any(det <= 0.1):
            raise DegenerateMapError(
                "reference map is degenerate: zeta^2 + zeta rho d_rho zeta <= 0.1"
            )
        rho = np.asarray(rho, dtype=float)
        i00 = zeta / det
        i01 = -rho * grad[..., 1] / det
        i10 = np.zeros_like(i00)
        i11 = (zeta + rho_dzeta) / det
        return np.stack(
            [np.stack([i00, i01], axis=-1), np.stack([i10, i11], axis=-1)],
            axis=-2,
        )


def kernel_args(pair, w, theta, xi):
    """Kernel arguments ``(b_tilde, B_tilde, b, B)`` at ``(w, theta, xi)``.

    ``b_tilde = w (1 + h(theta+xi) eta_delta(w)) / (1 + h(theta))`` and
    ``B_tilde = (r w / R) (1 + h(theta+xi) eta_delta(w)) / (1 + H(theta))``;
    ``b``/``B`` are their values at ``xi = 0``.
    """
    w = np.asarray(w, dtype=float)
    theta = np.asarray(theta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    eta = eta_delta(w, pair.delta)
    h_here = evaluate_at(pair.h, theta)
    h_there = evaluate_at(pair.h, theta + xi)
    H_here = evaluate_at(pair.H, theta)
    ratio = pair.r / pair.R
    b_tilde = w * (1.0 + h_there * eta) / (1.0 + h_here)
    b = w * (1.0 + h_here * eta) / (1.0 + h_here)
    B_tilde = ratio * w * (1.0 + h_there * eta) / (1.0 + H_here)
    B = ratio * w * (1.0 + h_here * eta) / (1.0 + H_here)
    return b_tilde, B_tilde, b, B
