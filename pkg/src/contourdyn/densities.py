"""Coupled layer densities on the two interfaces.

The normal velocity of each interface is induced by a pair of (derivatives of)
layer densities ``jump_prime`` on the inner curve and ``outer_prime`` on the
outer curve.  They solve the coupled second-kind system

    jump' = 2 A ( f' grad_r + f grad_t
                  + gamma'^perp . K_in jump' + gamma'^perp . K_{in,out} outer' )
    outer' = -2 ( F' grad_r + F grad_t
                  + Gamma'^perp . K_out outer' + Gamma'^perp . K_{out,in} jump' )

where ``A = (mu - nu)/(mu + nu)`` is the mobility contrast and the gradients
are the source-potential gradients restricted to each curve.  For |A| < 1 the
system is solved by a damped Picard iteration; both unknowns are mean-free.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .layer_ops import (
    interaction_inner_from_outer,
    interaction_outer_from_inner,
    singular_normal,
    singular_tangent,
)
from .spectral import PeriodicField, derivative

__all__ = [
    "BoundaryDensities",
    "DensitySolveError",
    "solve_densities",
    "static_remainders",
    "linearized_densities",
]


class DensitySolveError(RuntimeError):
    """Raised when the Picard iteration for the densities fails to contract."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


@dataclasses.dataclass(frozen=True)
class BoundaryDensities:
    """Converged density derivatives and the iteration's residual history."""

    jump_prime: PeriodicField
    outer_prime: PeriodicField
    residual_history: tuple


def _perp_pairing(curve, pair, psi):
    """``gamma'^perp . K_gamma psi`` combining the two singular pairings.

    gamma'^perp = -f e_r + f' e_theta, so the pairing with K splits into the
    normal and tangent singular operators directly.
    """
    return singular_normal(curve, pair, psi)


def _perp_interaction(pair, psi, inner):
    """``gamma'^perp . K_cross psi`` from the radial/tangential reductions."""
    if inner:
        radial, tangential = interaction_inner_from_outer(pair, psi)
        h = pair.h
    else:
        radial, tangential = interaction_outer_from_inner(pair, psi)
        h = pair.H
    slope = derivative(h) / (h + 1.0)  # f'/f  (resp. F'/F)
    return radial * -1.0 + tangential * slope


def solve_densities(
    pair,
    contrast,
    grads_inner,
    grads_outer,
    *,
    tol=1e-10,
    max_iter=100,
    damping=0.8,
    c_star=None,
    c_star_tilde=None,
):
    """Solve the coupled density system by damped Picard iteration.

    ``grads_inner`` / ``grads_outer`` are ``(tangential, radial)`` pairs of
    :class:`PeriodicField` values of the source-potential gradient on each
    curve.  ``contrast`` is the mobility contrast A in (-1, 1).  When the
    boundary speeds ``c_star`` / ``c_star_tilde`` are supplied the iteration
    starts from the small-deviation closed form, otherwise from zero.
    """
    if not -1.0 < contrast < 1.0:
        raise ValueError("mobility contrast must lie in (-1, 1)")
    tang_in, rad_in = grads_inner
    tang_out, rad_out = grads_outer
    f = PeriodicField(pair.f())
    big_f = PeriodicField(pair.F())
    fp = derivative(f)
    big_fp = derivative(big_f)

    drive_inner = (fp * rad_in + f * tang_in) * (2.0 * contrast)
    drive_outer = (big_fp * rad_out + big_f * tang_out) * (-2.0)

    n = pair.N
    if c_star is not None and c_star_tilde is not None:
        jump = PeriodicField.zeros(n)
        outer = PeriodicField.zeros(n)
        for k in range(1, n // 2):
            fk = pair.h.mode(k) * pair.r
            bk = pair.H.mode(k) * pair.R
            jk, ok = linearized_densities(
                k, contrast, c_star, c_star_tilde, pair.r, pair.R, fk, bk
            )
            theta = PeriodicField.nodes(n)
            jump = jump + PeriodicField(2.0 * np.real(jk * np.exp(1j * k * theta)))
            outer = outer + PeriodicField(2.0 * np.real(ok * np.exp(1j * k * theta)))
    else:
        jump = PeriodicField.zeros(n)
        outer = PeriodicField.zeros(n)

    history = []
    increases = 0
    prev_res = np.inf
    for _ in range(max_iter):
        new_jump = drive_inner + (
            _perp_pairing("inner", pair, jump)
            + _perp_interaction(pair, outer, inner=True)
        ) * (2.0 * contrast)
        new_outer = drive_outer + (
            _perp_pairing("outer", pair, outer)
            + _perp_interaction(pair, jump, inner=False)
        ) * (-2.0)
        new_jump = new_jump.remove_mean()
        new_outer = new_outer.remove_mean()
        res = max(
            (new_jump - jump).sup_norm(),
            (new_outer - outer).sup_norm(),
        )
        history.append(res)
        jump = jump * (1.0 - damping) + new_jump * damping
        outer = outer * (1.0 - damping) + new_outer * damping
        if res <= tol:
            return BoundaryDensities(jump, outer, tuple(history))
        if res > prev_res:
            increases += 1
            if increases >= 5:
                raise DensitySolveError(
                    "density iteration is not contracting "
                    f"(residual grew for {increases} consecutive sweeps)",
                    history,
                )
        else:
            increases = 0
        prev_res = res
    raise DensitySolveError(
        f"density iteration did not reach tol={tol:g} in {max_iter} sweeps "
        f"(last residual {history[-1]:.3e})",
        history,
    )


def equation_residual(pair, densities, contrast, grads_inner, grads_outer):
    """Fixed-point residual of the density system for given densities.

    Evaluates the same operators as :func:`solve_densities` (optionally on a
    finer grid, by resampling the inputs beforehand) and returns the two
    residual fields ``(jump' - RHS_jump, outer' - RHS_outer)``.
    """
    tang_in, rad_in = grads_inner
    tang_out, rad_out = grads_outer
    f = PeriodicField(pair.f())
    big_f = PeriodicField(pair.F())
    fp = derivative(f)
    big_fp = derivative(big_f)
    drive_inner = (fp * rad_in + f * tang_in) * (2.0 * contrast)
    drive_outer = (big_fp * rad_out + big_f * tang_out) * (-2.0)
    jump = densities.jump_prime
    outer = densities.outer_prime
    rhs_jump = (
        drive_inner
        + (
            _perp_pairing("inner", pair, jump)
            + _perp_interaction(pair, outer, inner=True)
        )
        * (2.0 * contrast)
    ).remove_mean()
    rhs_outer = (
        drive_outer
        + (
            _perp_pairing("outer", pair, outer)
            + _perp_interaction(pair, jump, inner=False)
        )
        * (-2.0)
    ).remove_mean()
    return jump - rhs_jump, outer - rhs_outer


def static_remainders(pair, densities, contrast, c_star, c_star_tilde):
    """Residuals of the densities against their small-deviation closed form.

    Returns ``(R_jump, R_outer)`` with

        R_jump  = jump'  - 2 A c* f' - A S outer'
        R_outer = outer' + 2 c~* F' - S jump'

    where ``S`` transfers a density across the gap: inner -> outer (and back)
    through the smooth interaction pairings at leading order, realized here by
    the Fourier multiplier ``(r/R)^|k|``.
    """
    from .spectral import poisson_smooth

    s = pair.r / pair.R
    fp = derivative(pair.h) * pair.r
    big_fp = derivative(pair.H) * pair.R
    r_jump = (
        densities.jump_prime
        - fp * (2.0 * contrast * c_star)
        - poisson_smooth(densities.outer_prime, s) * contrast
    )
    r_outer = (
        densities.outer_prime
        + big_fp * (2.0 * c_star_tilde)
        - poisson_smooth(densities.jump_prime, s)
    )
    return r_jump, r_outer


def linearized_densities(k, contrast, c_star, c_star_tilde, r, big_r, f_k, F_k):
    """Closed-form density modes for a single-harmonic perturbation.

    For interface modes ``f_k``, ``F_k`` (complex coefficients of e^{i k
    theta}) the small-deviation system decouples per mode:

        jump'_k  = 2 A i k (c* f_k - s^k c~* F_k) / (1 - A s^{2k})
        outer'_k = 2 i k (A s^k c* f_k - c~* F_k) / (1 - A s^{2k})
    """
    if k < 1:
        raise ValueError("mode number must be >= 1")
    s = (r / big_r) ** k
    det = 1.0 - contrast * s * s
    jump_k = 2.0 * contrast * 1j * k * (c_star * f_k - s * c_star_tilde * F_k) / det
    outer_k = 2.0 * 1j * k * (contrast * s * c_star * f_k - c_star_tilde * F_k) / det
    return jump_k, outer_k
