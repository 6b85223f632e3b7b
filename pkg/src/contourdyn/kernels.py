"""Poisson-type scalar kernels on the annulus and their derivatives.

The four kernels, for ``s >= 0`` and an angle ``xi``::

    P(s, xi) = (1 - s^2) / den        den = 1 + s^2 - 2 s cos(xi)
    Q(s, xi) = 2 s sin(xi) / den
    K(s, xi) = s * Q(s, xi)
    J(s, xi) = -s * (1 + P(s, xi))

The denominator is always evaluated in the cancellation-free factored form
``(1 - s)^2 + 4 s sin^2(xi/2)``, which vanishes only at ``(s, xi) = (1, 0)``.
All functions are vectorized and branch-free except for the singular-point
guard.

Closed-form partial derivatives (with the conjugacy identities
``dP/dxi = -s dQ/ds`` and ``dQ/dxi = s dP/ds`` holding exactly)::

    dP/ds = (2 (1 + s^2) cos(xi) - 4 s) / den^2
    dQ/ds = 2 (1 - s^2) sin(xi) / den^2
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularKernelPointError",
    "kernel_denominator",
    "eval_poisson",
    "eval_kj",
    "eval_poisson_derivs",
]


class SingularKernelPointError(ValueError):
    """Raised when a kernel is evaluated at the singular point (s, xi) = (1, 0)."""


def kernel_denominator(s, xi):
    """``(1-s)^2 + 4 s sin^2(xi/2)``, the factored form of ``1+s^2-2s cos(xi)``."""
    s = np.asarray(s, dtype=float)
    xi = np.asarray(xi, dtype=float)
    half_sin = np.sin(0.5 * xi)
    return (1.0 - s) ** 2 + 4.0 * s * half_sin * half_sin


def _checked_denominator(s, xi):
    den = kernel_denominator(s, xi)
    if np.any(den == 0.0):
        raise SingularKernelPointError(
            "kernel evaluated at the singular point (s, xi) = (1, 0)"
        )
    return den


def eval_poisson(s, xi):
    """Return ``(P, Q)`` at ``(s, xi)``; inputs broadcast."""
    s = np.asarray(s, dtype=float)
    xi = np.asarray(xi, dtype=float)
    den = _checked_denominator(s, xi)
    p = (1.0 - s * s) / den
    q = 2.0 * s * np.sin(xi) / den
    return p, q


def eval_kj(s, xi):
    """Return ``(K, J) = (s*Q, -s*(1+P))`` at ``(s, xi)``; inputs broadcast."""
    p, q = eval_poisson(s, xi)
    s = np.asarray(s, dtype=float)
    return s * q, -s * (1.0 + p)


def eval_poisson_derivs(s, xi):
    """Return ``(dP_ds, dP_dxi, dQ_ds, dQ_dxi)`` at ``(s, xi)``."""
    s = np.asarray(s, dtype=float)
    xi = np.asarray(xi, dtype=float)
    den = _checked_denominator(s, xi)
    den2 = den * den
    cos_xi = np.cos(xi)
    dp_ds = (2.0 * (1.0 + s * s) * cos_xi - 4.0 * s) / den2
    dq_ds = 2.0 * (1.0 - s * s) * np.sin(xi) / den2
    dp_dxi = -s * dq_ds
    dq_dxi = s * dp_ds
    return dp_ds, dp_dxi, dq_ds, dq_dxi
