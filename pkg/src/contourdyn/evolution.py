"""Interface evolution: right-hand sides, exponential time stepping, run loop.

The deviations ``(h, H)`` obey

    d/dt h = -lambda_h (-Delta)^{1/2} h + N_h(h, H)
    d/dt H = -lambda_H (-Delta)^{1/2} H + N_H(h, H)

with ``lambda_h = A c*/r`` and ``lambda_H = -c~*/R``.  The linear half-heat
parts are integrated exactly per Fourier mode (exponential time
differencing); the nonlinear parts ``N`` are assembled from the full contour
equations: density layer potentials plus the gradient of the source
potential.  A second, independent velocity (``velocity_direct``) differentiates
the reference-domain pressure at the interfaces and serves as a cross-check.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.special import iv

from .densities import solve_densities
from .geometry import (
    GeometryError,
    InterfacePair,
    ReferenceMap,
    collision_check,
    needs_rereference,
    rereference,
    smallness_norms,
)
from .growth_potential import QuadSpec, SourceField, grad_inner, grad_outer
from .layer_ops import (
    interaction_inner_from_outer,
    interaction_outer_from_inner,
    singular_tangent,
)
from .pressure import (
    SolverError,
    boundary_gradients,
    solve_radial,
    solve_reference,
)
from .spectral import (
    PeriodicField,
    dealias,
    derivative,
    frac_laplacian_half,
    resample,
)

__all__ = [
    "ModelParams",
    "Numerics",
    "DiagRecord",
    "SimState",
    "CollisionError",
    "StepError",
    "RunResult",
    "build_state",
    "contour_velocity",
    "velocity_direct",
    "assemble_rhs",
    "dispersion_matrix",
    "dispersion_matrix_exact",
    "radial_speed_linear_law",
    "step_etd",
    "run",
]

DIAG_MODES = 8


class CollisionError(RuntimeError):
    """The two interfaces have touched; the evolution cannot continue."""


class StepError(RuntimeError):
    """A time step failed; carries the last good state."""

    def __init__(self, message, state):
        super().__init__(message)
        self.state = state


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Physical parameters: the two mobilities and the growth law."""

    mu: float
    nu: float
    law: object  # GrowthLaw

    def __post_init__(self):
        if self.mu <= 0.0 or self.nu <= 0.0:
            raise ValueError("mobilities must be positive")

    @property
    def contrast(self):
        return (self.mu - self.nu) / (self.mu + self.nu)


@dataclasses.dataclass(frozen=True)
class Numerics:
    """Discretization knobs shared by the per-step solves."""

    N_rho: int = 128
    N_omega: int = 64
    quad: QuadSpec = dataclasses.field(default_factory=QuadSpec)
    pressure_tol: float = 1e-10
    density_tol: float = 1e-10
    etd_order: int = 1

    def __post_init__(self):
        if self.etd_order not in (1, 2):
            raise ValueError("etd_order must be 1 or 2")


@dataclasses.dataclass(frozen=True)
class DiagRecord:
    """Per-state diagnostics for the CSV stream."""

    time: float
    annulus_area: float
    m0: float
    M0: float
    c_star: float
    c: float
    mode_amplitudes_h: tuple
    mode_amplitudes_H: tuple
    pressure_residual: float
    density_residual: float

    def __post_init__(self):
        if not self.annulus_area > 0.0:
            raise ValueError("annulus area must be positive")


@dataclasses.dataclass(frozen=True)
class SimState:
    """Immutable snapshot: geometry plus caches consistent with it."""

    time: float
    pair: InterfacePair
    pressure: object  # ReferencePressure
    radial: object  # RadialPressure at the current reference radii
    densities: object  # BoundaryDensities
    grads_inner: tuple  # (tangential, radial) PeriodicFields on the inner curve
    grads_outer: tuple
    diagnostics: DiagRecord


def _annulus_area(pair):
    f = pair.f()
    big_f = pair.F()
    return float(np.pi * np.mean(big_f * big_f - f * f))


def build_state(time, pair, model, numerics):
    """Solve all caches (pressure, source gradients, densities) for ``pair``."""
    ref_map = ReferenceMap(pair)
    pressure = solve_reference(
        model.law,
        model.mu,
        model.nu,
        ref_map,
        numerics.N_rho,
        numerics.N_omega,
        tol=numerics.pressure_tol,
    )
    radial = solve_radial(
        model.law, model.mu, model.nu, pair.r, pair.R, max(64, numerics.N_rho)
    )
    g0 = SourceField.from_reference_pressure(pressure)
    gi = grad_inner(pair, g0, numerics.quad, flux_target=pressure.production_jac)
    go = grad_outer(pair, g0, numerics.quad, flux_target=pressure.production_jac)
    densities = solve_densities(
        pair,
        model.contrast,
        gi,
        go,
        tol=numerics.density_tol,
        c_star=radial.c_star,
        c_star_tilde=radial.c_star_tilde,
    )
    m0, big_m0 = smallness_norms(pair)
    diag = DiagRecord(
        time=time,
        annulus_area=_annulus_area(pair),
        m0=m0,
        M0=big_m0,
        c_star=radial.c_star,
        c=pressure.c,
        mode_amplitudes_h=tuple(
            pair.h.mode_amplitude(k) for k in range(1, DIAG_MODES + 1)
        ),
        mode_amplitudes_H=tuple(
            pair.H.mode_amplitude(k) for k in range(1, DIAG_MODES + 1)
        ),
        pressure_residual=pressure.residual_history[-1],
        density_residual=densities.residual_history[-1],
    )
    return SimState(
        time=time,
        pair=pair,
        pressure=pressure,
        radial=radial,
        densities=densities,
        grads_inner=gi,
        grads_outer=go,
        diagnostics=diag,
    )


def contour_velocity(state):
    """``(d/dt h, d/dt H)`` from the boundary-integral contour equations."""
    pair = state.pair
    jump = state.densities.jump_prime
    outer = state.densities.outer_prime
    tang_in, rad_in = state.grads_inner
    tang_out, rad_out = state.grads_outer

    f = PeriodicField(pair.f())
    fp = derivative(f)
    slope_in = fp / f
    self_in = singular_tangent("inner", pair, jump)
    x_rad, x_tan = interaction_inner_from_outer(pair, outer)
    cross_in = x_rad * slope_in + x_tan  # gamma' . K_cross
    grad_in = rad_in * -1.0 + slope_in * tang_in  # gamma'^perp . grad / f
    dtf = (self_in + cross_in) / f * -1.0 + grad_in
    dth = dtf * (1.0 / pair.r)

    big_f = PeriodicField(pair.F())
    big_fp = derivative(big_f)
    slope_out = big_fp / big_f
    self_out = singular_tangent("outer", pair, outer)
    y_rad, y_tan = interaction_outer_from_inner(pair, jump)
    cross_out = y_rad * slope_out + y_tan
    grad_out = rad_out * -1.0 + slope_out * tang_out
    dtF = (self_out + cross_out) / big_f * -1.0 + grad_out
    dtH = dtF * (1.0 / pair.R)
    return dth, dtH


def _to_contour_grid(values, n):
    return resample(PeriodicField(np.asarray(values, dtype=float)), n)


def velocity_direct(state):
    """``(d/dt h, d/dt H)`` from one-sided pressure gradients (independent path)."""
    pair = state.pair
    grads = boundary_gradients(state.pressure)
    n = pair.N
    in_rad = _to_contour_grid(grads.inner_radial, n)
    in_tan = _to_contour_grid(grads.inner_tangential, n)
    out_rad = _to_contour_grid(grads.outer_radial, n)

    h = pair.h
    hp = derivative(h)
    one_h = h + 1.0
    mu = state.pressure.mu
    nu = state.pressure.nu
    coeff_r = (one_h * one_h + hp * hp) / (one_h * one_h * one_h)
    coeff_t = hp / (one_h * one_h)
    dth = (coeff_r * in_rad - coeff_t * in_tan) * (-mu / pair.r)

    big_h = pair.H
    big_hp = derivative(big_h)
    one_H = big_h + 1.0
    coeff_R = (one_H * one_H + big_hp * big_hp) / (one_H * one_H * one_H)
    dtH = coeff_R * out_rad * (-nu / pair.R)
    return dth, dtH


def linear_rates(contrast, c_star, c_star_tilde, r, big_r):
    """``(lambda_h, lambda_H)`` for the per-mode exponential integrator."""
    return contrast * c_star / r, -c_star_tilde / big_r


def assemble_rhs(state, contrast):
    """Nonlinear right-hand sides for the split form, plus the linear rates.

    Returns ``(rhs_h, rhs_H, lambda_h, lambda_H)`` with the convention
    ``d/dt h = -lambda_h (-Delta)^{1/2} h + rhs_h`` (and likewise for H), so
    ``rhs`` carries the drift, all nonlinear terms, and the correction that
    cancels the linear part out of the full velocity.
    """
    pair = state.pair
    lam_h, lam_H = linear_rates(
        contrast, state.radial.c_star, state.radial.c_star_tilde, pair.r, pair.R
    )
    dth, dtH = contour_velocity(state)
    rhs_h = dealias(dth) + frac_laplacian_half(pair.h) * lam_h
    rhs_H = dealias(dtH) + frac_laplacian_half(pair.H) * lam_H
    return rhs_h, rhs_H, lam_h, lam_H


def dispersion_matrix(k, contrast, c_star, r, big_r):
    """Small-deviation growth-rate matrix for mode ``k`` (multiplier calculus).

    Governs ``d/dt (f_k, F_k) = M(k) (f_k, F_k)`` after eliminating the layer
    densities through their per-mode closed form.
    """
    if k < 1:
        raise ValueError("mode number must be >= 1")
    ct = (r / big_r) * c_star
    s = (r / big_r) ** k
    det = 1.0 - contrast * s * s
    return np.array(
        [
            [
                -contrast * c_star * k * (1.0 + s * s) / (r * det),
                ct * k * s * (1.0 + contrast) / (r * det),
            ],
            [
                -2.0 * contrast * c_star * k * s / (big_r * det),
                ct * k * (1.0 + contrast * s * s) / (big_r * det),
            ],
        ]
    )


def radial_speed_linear_law(mu, nu, G0, pM, r, big_r):
    """Closed-form ``(c*, c~*)`` for the linear growth law via Bessel functions.

    The radially symmetric pressure inside the inner disc is
    ``p = pM + a0 I_0(kappa rho)`` with ``kappa^2 = G0 / (mu pM)``, matched to a
    logarithmic annulus profile vanishing at ``big_r``.
    """
    kap = math.sqrt(G0 / (mu * pM))
    i0 = iv(0, kap * r)
    i1 = iv(1, kap * r)
    a0 = -pM / (i0 + (mu / nu) * kap * r * i1 * math.log(big_r / r))
    c_star = mu * a0 * kap * i1
    return c_star, (r / big_r) * c_star


def dispersion_matrix_exact(k, mu, nu, G0, pM, r, big_r):
    """Growth-rate matrix from the exact linearization about the radial state.

    Unlike :func:`dispersion_matrix` (which drops the pressure perturbation
    induced inside the disc by the moving boundary), this solves the full
    mode-``k`` perturbation problem for the linear growth law: a modified
    Bessel profile inside, harmonic annulus outside, matched through the
    interface jump conditions.  Returns ``(M, c_star, c_star_tilde)`` with
    ``M`` acting on the relative perturbations ``(h_k, H_k)``.
    """
    if k < 1:
        raise ValueError("mode number must be >= 1")
    kap = math.sqrt(G0 / (mu * pM))
    i0 = iv(0, kap * r)
    i1 = iv(1, kap * r)
    a0 = -pM / (i0 + (mu / nu) * kap * r * i1 * math.log(big_r / r))
    c_star = mu * a0 * kap * i1
    ct_star = (r / big_r) * c_star
    g_r = -mu * kap * kap * a0 * i0  # source value at the inner interface
    ik = iv(k, kap * r)
    dik = 0.5 * (iv(k - 1, kap * r) + iv(k + 1, kap * r))
    mat = np.zeros((2, 2))
    for j, (dh, dH) in enumerate([(1.0, 0.0), (0.0, 1.0)]):
        lhs = np.array(
            [
                [ik, -(r**k), -(r ** (-k))],
                [mu * kap * dik, -nu * k * r ** (k - 1), nu * k * r ** (-k - 1)],
                [0.0, big_r**k, big_r ** (-k)],
            ]
        )
        rhs = np.array(
            [
                (c_star / nu - c_star / mu) * dh,
                g_r * dh,
                -(ct_star / nu) * dH,
            ]
        )
        al, be, ga = np.linalg.solve(lhs, rhs)
        mat[0, j] = (g_r + c_star / r) * dh - mu * al * kap * dik
        mat[1, j] = (ct_star / big_r) * dH - nu * k * (
            be * big_r ** (k - 1) - ga * big_r ** (-k - 1)
        )
    # the matching problem is posed for the physical amplitudes (r h, R H);
    # conjugate by diag(r, R) to act on (h, H) -- eigenvalues are unchanged
    mat[0, 1] *= big_r / r
    mat[1, 0] *= r / big_r
    return mat, c_star, ct_star


def _phi1(z):
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    small = np.abs(z) < 1e-8
    zi = np.where(small, 1.0, z)
    out = np.where(small, 1.0 + 0.5 * z, np.expm1(zi) / zi)
    return out


def _phi2(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-6
    zi = np.where(small, 1.0, z)
    out = np.where(small, 0.5 + z / 6.0, (np.expm1(zi) - zi) / (zi * zi))
    return out


def _etd_multipliers(n, lam, dt):
    k = np.fft.rfftfreq(n, d=1.0 / n)
    z = -lam * k * dt
    return np.exp(z), _phi1(z), _phi2(z)


def _etd1_update(field, rhs, lam, dt):
    n = field.N
    ez, p1, _ = _etd_multipliers(n, lam, dt)
    spec = np.fft.rfft(field.samples) / n
    rspec = np.fft.rfft(rhs.samples) / n
    new = ez * spec + dt * p1 * rspec
    return PeriodicField(np.fft.irfft(new * n, n=n))


def _etd2_correct(field_a, rhs_old, rhs_new, lam, dt):
    n = field_a.N
    _, _, p2 = _etd_multipliers(n, lam, dt)
    spec = np.fft.rfft(field_a.samples) / n
    dspec = np.fft.rfft((rhs_new - rhs_old).samples) / n
    new = spec + dt * p2 * dspec
    return PeriodicField(np.fft.irfft(new * n, n=n))


def _renew_pair(pair, new_h, new_H):
    f_new = pair.r * (1.0 + new_h.samples)
    big_f_new = pair.R * (1.0 + new_H.samples)
    if float(np.min(big_f_new) - np.max(f_new)) <= 0.0:
        raise CollisionError("interfaces touched")
    return InterfacePair(pair.r, pair.R, pair.delta, new_h, new_H)


def step_etd(state, dt, model, numerics):
    """Advance one step with ETD1 (``etd_order=1``) or ETD2RK (``etd_order=2``).

    The linear half-heat part is integrated exactly per mode; caches are
    recomputed for the new geometry; re-referencing is applied when the mean
    deviation trips the geometry trigger.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    pair = state.pair
    lam_h, _ = linear_rates(
        model.contrast,
        state.radial.c_star,
        state.radial.c_star_tilde,
        pair.r,
        pair.R,
    )
    if lam_h < 0.0:
        guard = 0.5 * pair.r / (abs(state.radial.c_star) * pair.N)
        if dt > guard:
            raise ValueError(
                f"dt={dt:g} too large for the unstable regime (need <= {guard:g})"
            )
    try:
        rhs_h, rhs_H, lam_h, lam_H = assemble_rhs(state, model.contrast)
        h_a = _etd1_update(pair.h, rhs_h, lam_h, dt)
        big_h_a = _etd1_update(pair.H, rhs_H, lam_H, dt)
        if numerics.etd_order == 2:
            pair_a = _renew_pair(pair, h_a, big_h_a)
            if needs_rereference(pair_a):
                # keep the predictor solve well-conditioned; rescale its rhs
                # back to the step's reference radii
                pair_a = rereference(pair_a)
            state_a = build_state(state.time + dt, pair_a, model, numerics)
            rhs_h_a, rhs_H_a, _, _ = assemble_rhs(state_a, model.contrast)
            rhs_h_a = rhs_h_a * (pair_a.r / pair.r)
            rhs_H_a = rhs_H_a * (pair_a.R / pair.R)
            h_new = _etd2_correct(h_a, rhs_h, rhs_h_a, lam_h, dt)
            big_h_new = _etd2_correct(big_h_a, rhs_H, rhs_H_a, lam_H, dt)
        else:
            h_new, big_h_new = h_a, big_h_a
        new_pair = _renew_pair(pair, h_new, big_h_new)
        if needs_rereference(new_pair):
            new_pair = rereference(new_pair)
        if collision_check(new_pair) <= 0.0:
            raise CollisionError("interfaces touched")
        return build_state(state.time + dt, new_pair, model, numerics)
    except CollisionError:
        raise
    except (SolverError, GeometryError) as exc:
        raise StepError(f"time step failed: {exc}", state) from exc


@dataclasses.dataclass(frozen=True)
class RunResult:
    """Trajectory snapshots plus how the run ended."""

    states: tuple
    status: str  # "finished" | "collision" | "solver_failure"
    message: str = ""


def run(config, on_state=None):
    """Run the full simulation loop described by a configuration object.

    ``config`` provides model parameters, initial geometry, resolutions, and
    the time grid (see the CLI module).  States are recorded every
    ``config.output_every`` steps (always including the initial and final
    ones); ``on_state`` is called on each recorded state as it is produced.
    """
    model = ModelParams(mu=config.mu, nu=config.nu, law=config.law)
    numerics = Numerics(
        N_rho=config.N_rho,
        N_omega=config.N_omega,
        quad=QuadSpec(N_w=config.N_w, N_xi=config.N_xi),
        pressure_tol=config.pressure_tol,
        density_tol=config.density_tol,
        etd_order=config.etd_order,
    )
    pair = config.initial_pair()
    n_steps = int(round(config.T_end / config.dt))
    state = build_state(0.0, pair, model, numerics)
    states = [state]
    if on_state is not None:
        on_state(state)
    status, message = "finished", ""
    for step in range(1, n_steps + 1):
        try:
            state = step_etd(state, config.dt, model, numerics)
        except CollisionError as exc:
            status, message = "collision", str(exc)
            break
        except StepError as exc:
            status, message = "solver_failure", str(exc)
            break
        if step % config.output_every == 0 or step == n_steps:
            states.append(state)
            if on_state is not None:
                on_state(state)
    return RunResult(states=tuple(states), status=status, message=message)
