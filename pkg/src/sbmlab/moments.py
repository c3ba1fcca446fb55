"""Closed-form and quadrature evaluation of the first two moments.

Every formula here is an integral of smooth closed-form factors: the heat
semigroup acting on mixtures is exact (see :mod:`sbmlab.kernels`), the
kernel's own spatial integral against Lebesgue measure collapses to one, and
the occupation bracket int_s^t p(u-s, z-c) du has the erfc closed form.
Whatever remains is one-dimensional adaptive quadrature of analytic
integrands at 1e-10 absolute tolerance.

Variance formulas for the indexed family scale the branching intensity by
1/k^2; the limit-process covariance and characteristic functional use the
plain intensity (the index cancels against the fluctuation scaling).
"""

from __future__ import annotations

import cmath
import json
import math

from scipy.integrate import quad

from .errors import ContractError, DomainError
from .kernels import (
    DensityMeasure,
    Lebesgue,
    ModelParams,
    TestFunction,
    ZeroMeasure,
    heat_kernel_time_integral,
    lebesgue_pairing,
    semigroup_apply,
)

__all__ = [
    "mean_mass",
    "var_mass",
    "mean_occupation",
    "var_occupation",
    "fluctuation_second_moment",
    "ou_covariance",
    "ou_char_functional",
    "moment_report_json",
]

QUAD_ABS_TOL = 1e-10


def _semigroup_at(f: TestFunction, t: float, x: float) -> float:
    return float(semigroup_apply(f, t)(x)) if t > 0.0 else float(f(x))


def _initial_pairing(initial, f: TestFunction, t: float) -> float:
    """<mu P_t, f> = <mu, P_t f> for the supported initial measures."""
    if isinstance(initial, Lebesgue):
        # heat flow preserves the Lebesgue pairing
        return lebesgue_pairing(f)
    if isinstance(initial, DensityMeasure):
        return lebesgue_pairing(initial.density * semigroup_apply(f, t))
    if isinstance(initial, ZeroMeasure):
        return 0.0
    raise ContractError(f"unsupported initial measure {initial!r}")


def mean_mass(initial, f: TestFunction, t: float) -> float:
    """E<X_t, f> = <mu P_t, f>."""
    if t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")
    return _initial_pairing(initial, f, t)


def var_mass(initial, f: TestFunction, t: float, params: ModelParams) -> float:
    """Var<X_t, f> with branching intensity sigma^2 / k^2.

    For Lebesgue initial the kernel's x-integral is one, leaving
    sigma_eff^2 int_0^t (P_s f(c))^2 ds; for a density initial the
    x-integral is itself a semigroup action evaluated at the catalyst.
    """
    if t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t == 0.0 or params.sigma2 == 0.0:
        return 0.0
    c = params.c
    if isinstance(initial, Lebesgue):
        integrand = lambda s: _semigroup_at(f, s, c) ** 2
    elif isinstance(initial, DensityMeasure):
        mu = initial.density

        def integrand(s):
            return _semigroup_at(mu, t - s, c) * _semigroup_at(f, s, c) ** 2

    else:
        raise ContractError(f"unsupported initial measure {initial!r}")
    val, _ = quad(integrand, 0.0, t, epsabs=QUAD_ABS_TOL, limit=200)
    return params.sigma2_eff * val


def mean_occupation(initial, z: float, t: float) -> float:
    """E y_t(z) = int mu(dx) int_0^t p(s, z - x) ds; equals t under Lebesgue."""
    if t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t == 0.0:
        return 0.0
    if isinstance(initial, Lebesgue):
        return t
    if isinstance(initial, DensityMeasure):
        mu = initial.density
        val, _ = quad(
            lambda s: _semigroup_at(mu, s, z), 0.0, t, epsabs=QUAD_ABS_TOL, limit=200
        )
        return val
    raise ContractError(f"unsupported initial measure {initial!r}")


def var_occupation(initial, z: float, t: float, params: ModelParams) -> float:
    """Var y_t(z) with intensity sigma^2 / k^2.

    Lebesgue initial at the catalyst point has the closed form
    sigma_eff^2 t^2 / pi; elsewhere the occupation bracket enters squared
    under a single quadrature.
    """
    if t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t == 0.0 or params.sigma2 == 0.0:
        return 0.0
    c = params.c
    d = z - c
    if isinstance(initial, Lebesgue):
        if d == 0.0:
            # bracket is sqrt(2 (t-s)/pi); the s-integral is elementary
            return params.sigma2_eff * t * t / math.pi
        integrand = lambda s: float(heat_kernel_time_integral(t - s, d)) ** 2
    elif isinstance(initial, DensityMeasure):
        mu = initial.density

        def integrand(s):
            return (
                _semigroup_at(mu, s, c)
                * float(heat_kernel_time_integral(t - s, d)) ** 2
            )

    else:
        raise ContractError(f"unsupported initial measure {initial!r}")
    val, _ = quad(integrand, 0.0, t, epsabs=QUAD_ABS_TOL, limit=200)
    return params.sigma2_eff * val


def fluctuation_second_moment(f: TestFunction, t: float, params: ModelParams) -> float:
    """E<Z_k(t), f>^2 = sigma^2 int_0^t (P_s f(c))^2 ds under Lebesgue start.

    The index k never enters: the 1/k^2 intensity cancels against the k^2
    of the centered rescaling, so the value is shared by the whole family.
    """
    if t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")
    if t == 0.0 or params.sigma2 == 0.0:
        return 0.0
    c = params.c
    val, _ = quad(
        lambda s: _semigroup_at(f, s, c) ** 2, 0.0, t, epsabs=QUAD_ABS_TOL, limit=200
    )
    return params.sigma2 * val


def ou_covariance(
    f: TestFunction,
    g: TestFunction,
    t: float,
    t_prime: float,
    params: ModelParams,
    initial_dual=None,
) -> float:
    """Cov(<Z(t), f>, <Z(t'), g>) of the limit process.

    From the explicit noise representation, sigma^2 int_0^{t ^ t'}
    P_{t-s} f(c) P_{t'-s} g(c) ds.  A deterministic initial state shifts the
    mean only, so initial_dual does not affect the covariance.
    """
    if t < 0.0 or t_prime < 0.0:
        raise DomainError("times must be >= 0")
    lo = min(t, t_prime)
    if lo == 0.0 or params.sigma2 == 0.0:
        return 0.0
    c = params.c

    def integrand(s):
        return _semigroup_at(f, t - s, c) * _semigroup_at(g, t_prime - s, c)

    val, _ = quad(integrand, 0.0, lo, epsabs=QUAD_ABS_TOL, limit=200)
    return params.sigma2 * val


def ou_char_functional(
    f: TestFunction, t: float, params: ModelParams, initial=ZeroMeasure()
) -> complex:
    """E exp(i <Z(t), f>) = exp(i <mu, P_t f> - (sigma^2/2) int_0^t P_s f(c)^2 ds)."""
    if t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")
    phase = _initial_pairing(initial, f, t)
    var = fluctuation_second_moment(f, t, params)
    return cmath.exp(complex(-0.5 * var, phase))


def moment_report_json(rows) -> str:
    """Serialize report rows {formula_id, inputs, value, method} as JSON."""
    return json.dumps(rows, indent=2, sort_keys=True)
