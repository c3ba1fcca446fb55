"""Independent numerical oracles for acceptance checks and tests.

These deliberately avoid the discretizations and code paths of the package
under test: the trace oracle uses panel-average product integration with
plain Picard iteration (not time marching with piecewise-linear panels); the
moment oracles use brute-force nested quadrature of the covariance formulas,
including the kernel x-integrals that the package collapses analytically.
"""

import math

import numpy as np
from scipy.signal import fftconvolve

from .kernels import (
    adaptive_gauss_legendre,
    heat_kernel_time_integral,
    semigroup_apply,
)


def picard_trace(forcing, params, T, n, tol=1e-12, max_iter=600):
    """Picard iteration for the reduced trace equation on an n-step grid.

    Scheme differences from the production solver: w^2 is approximated by
    panel-average constants (not piecewise-linear) and the whole vector map
    is iterated from w = g rather than marched in time.
    """
    dt = T / n
    grid = np.linspace(0.0, T, n + 1)
    g = np.asarray(forcing.at(grid, params.c), dtype=float)
    kappa = 0.5 * params.sigma2_eff
    # exact Abel mass per lag panel: a_l = K(l dt) - K((l-1) dt)
    lag_mass = np.diff(heat_kernel_time_integral(np.arange(n + 1) * dt, 0.0))
    w = g.copy()
    for _ in range(max_iter):
        u = w * w
        u_avg = 0.5 * (u[:-1] + u[1:])
        conv = fftconvolve(u_avg, lag_mass)[:n]
        integral = np.concatenate([[0.0], conv])
        w_new = g - kappa * integral
        change = float(np.max(np.abs(w_new - w)))
        w = w_new
        if change < tol:
            break
    else:
        raise RuntimeError("Picard oracle failed to converge")
    return grid, w


def picard_field(forcing, params, T, n, x, trace_w=None):
    """Full-field Picard value v(T, x) using the oracle trace."""
    if trace_w is None:
        _, trace_w = picard_trace(forcing, params, T, n)
    dt = T / n
    kappa = 0.5 * params.sigma2_eff
    u = trace_w * trace_w
    u_avg = 0.5 * (u[:-1] + u[1:])
    d = params.c - x
    lag_mass = np.diff(heat_kernel_time_integral(np.arange(n + 1) * dt, d))
    integral = float(np.dot(u_avg, lag_mass[::-1]))
    return float(forcing.at(T, x)) - kappa * integral


def _kernel_x_mass(s, c, span=14.0):
    """int p(s, c - x) dx by quadrature over +- span Gaussian widths."""
    width = math.sqrt(s)

    def kern(x):
        return np.exp(-0.5 * (c - x) ** 2 / s) / np.sqrt(2 * np.pi * s)

    return adaptive_gauss_legendre(
        kern, c - span * width, c + span * width, tol=1e-13
    )


def var_mass_oracle(f, t, params):
    """Nested quadrature of the mass-variance formula for Lebesgue initial.

    Integrates the kernel in x numerically instead of using its unit mass,
    exercising the 2-d structure of the formula end to end.
    """
    sig = params.sigma2_eff

    def inner(s):
        ps_c = semigroup_apply(f, s)(params.c) if s > 0 else f(params.c)
        return _kernel_x_mass(t - s, params.c) * ps_c * ps_c

    return sig * adaptive_gauss_legendre(np.vectorize(inner), 0.0, t, tol=1e-11)


def occupation_bracket(s, t, d):
    """int_s^t p(u - s, d) du via the substitution u - s = r^2.

    The substituted integrand sqrt(2/pi) exp(-d^2 / (2 r^2)) is bounded and
    smooth, so plain quadrature applies even at d = 0 where the original
    integrand has the Abel singularity.
    """
    upper = math.sqrt(max(t - s, 0.0))
    if upper == 0.0:
        return 0.0
    if d == 0.0:
        integrand = lambda r: np.full_like(np.asarray(r, dtype=float),
                                           math.sqrt(2.0 / math.pi))
    else:
        integrand = lambda r: np.where(
            np.asarray(r) > 0,
            math.sqrt(2.0 / math.pi)
            * np.exp(-0.5 * d * d / np.maximum(np.asarray(r) ** 2, 1e-300)),
            0.0,
        )
    return adaptive_gauss_legendre(integrand, 0.0, upper, tol=1e-13)


def var_occupation_oracle(z, t, params):
    """Nested quadrature of the occupation-variance formula (Lebesgue case)."""
    sig = params.sigma2_eff
    d = z - params.c

    def inner(s):
        return _kernel_x_mass(s, params.c) * occupation_bracket(s, t, d) ** 2

    return sig * adaptive_gauss_legendre(np.vectorize(inner), 0.0, t, tol=1e-11)
