"""Exact sampler of the limiting fluctuation process and Langevin checks.

The limit process tested by the statistics harness admits the explicit
noise representation

    <Z(t), f> = <mu, P_t f> + sigma * int_0^t P_{t-s} f(c) dB(s),

driven by one scalar Brownian motion shared by every test function.  On a
uniform grid the Wiener integral is accumulated with the midpoint rule for
the deterministic integrand (it is smooth, so no stochastic-calculus
subtleties arise and the variance error is O(dt^2)).  A Cholesky sampler of
the exact Gram matrix provides an independent second route to the same law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .kernels import (
    DensityMeasure,
    Lebesgue,
    ModelParams,
    TestFunction,
    ZeroMeasure,
    generator_apply,
    lebesgue_pairing,
    semigroup_apply,
)
from .moments import ou_char_functional, ou_covariance
from . import rng

__all__ = [
    "OuSample",
    "sample_ou_paths",
    "langevin_residual",
    "ou_transition_check",
    "cholesky_marginal_sample",
]


def _mean_pairing(initial, f, t):
    if isinstance(initial, ZeroMeasure):
        return 0.0
    if isinstance(initial, Lebesgue):
        return lebesgue_pairing(f)
    if isinstance(initial, DensityMeasure):
        return lebesgue_pairing(initial.density * semigroup_apply(f, t))
    raise ContractError(f"unsupported initial state {initial!r}")


@dataclass
class OuSample:
    """Paths of <Z(t), f_i> for several f sharing one driving noise.

    values[i] has shape (n_paths, n_times); brownian holds the driving
    B(t) on the same grid.  noise_id ties paths to their driving noise so
    consistency checks can refuse mismatched inputs.
    """

    fs: list
    grid: np.ndarray
    values: list
    brownian: np.ndarray
    noise_id: int
    params: ModelParams
    initial: object


def sample_ou_paths(
    fs,
    grid,
    params: ModelParams,
    initial=ZeroMeasure(),
    seed: int = 0,
    n_paths: int = 1,
) -> OuSample:
    """Sample the explicit solution on a time grid (0 = t_0 < ... < t_n).

    All test functions share the same Brownian increments, so joint laws
    and pathwise linear combinations are faithful.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or grid[0] != 0.0:
        raise DomainError("grid must start at 0 and contain at least two points")
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("grid must be strictly increasing")
    steps = np.diff(grid)
    n = len(steps)
    sigma = math.sqrt(params.sigma2)

    key = rng.substream(seed, rng.TAG_OU, 0)
    gen = np.random.Generator(np.random.Philox(key=key))
    db = gen.normal(0.0, 1.0, size=(n_paths, n)) * np.sqrt(steps)[None, :]
    brownian = np.concatenate(
        [np.zeros((n_paths, 1)), np.cumsum(db, axis=1)], axis=1
    )

    mids = 0.5 * (grid[:-1] + grid[1:])
    uniform = np.allclose(steps, steps[0], rtol=1e-12, atol=0.0)
    values = []
    for f in fs:
        # integrand P_{t_i - s_j^*} f(c) for j < i; rows indexed by i
        weights = np.zeros((n + 1, n))
        if uniform:
            # lag structure: t_i - s_j^* = (i - j - 1/2) dt
            lag_vals = np.array(
                [semigroup_apply(f, (l + 0.5) * steps[0])(params.c) for l in range(n)]
            )
            for i in range(1, n + 1):
                weights[i, :i] = lag_vals[:i][::-1]
        else:
            for i in range(1, n + 1):
                taus = grid[i] - mids[:i]
                weights[i, :i] = [semigroup_apply(f, tau)(params.c) for tau in taus]
        noise = db @ weights.T  # (n_paths, n+1)
        means = np.array([_mean_pairing(initial, f, t) for t in grid])
        values.append(means[None, :] + sigma * noise)
    return OuSample(list(fs), grid, values, brownian, seed, params, initial)


def langevin_residual(sample: OuSample, f_index: int, af_index: int) -> np.ndarray:
    """Sup-norm residual of the integrated evolution equation, per path.

    residual_i = <Z(t_i), f> - <mu, f> - sigma B(t_i) f(c)
                 - trapz(<Z(., Af)>, up to t_i);
    exact in the continuum, so the discrete residual measures integrator
    error and must shrink under grid refinement.
    """
    fs = sample.fs
    f = fs[f_index]
    af_claimed = fs[af_index]
    af_true = generator_apply(f)
    xs = np.linspace(-8.0, 8.0, 33)
    if np.max(np.abs(af_claimed(xs) - af_true(xs))) > 1e-10:
        raise ContractError(
            "af_index does not hold the generator image of f_index"
        )
    z_f = sample.values[f_index]
    z_af = sample.values[af_index]
    sigma = math.sqrt(sample.params.sigma2)
    fc = float(f(sample.params.c))
    mu_f = _mean_pairing(sample.initial, f, 0.0)

    grid = sample.grid
    n_paths, n_times = z_f.shape
    residual = np.zeros_like(z_f)
    # cumulative trapezoid of <Z(s), Af> along the grid
    steps = np.diff(grid)
    cum = np.zeros_like(z_f)
    cum[:, 1:] = np.cumsum(
        0.5 * steps[None, :] * (z_af[:, :-1] + z_af[:, 1:]), axis=1
    )
    residual = z_f - mu_f - sigma * fc * sample.brownian - cum
    return np.max(np.abs(residual), axis=1)


def ou_transition_check(
    f: TestFunction,
    t: float,
    params: ModelParams,
    n_paths: int = 100_000,
    seed: int = 0,
    grid_n: int = 256,
    initial=ZeroMeasure(),
):
    """Empirical characteristic function at argument 1 versus the analytic one."""
    if n_paths < 10_000:
        raise DomainError("need at least 1e4 paths for a meaningful check")
    if t == 0.0:
        empirical = complex(
            np.mean(np.exp(1j * np.full(n_paths, _mean_pairing(initial, f, 0.0))))
        )
        return empirical, ou_char_functional(f, 0.0, params, initial)
    grid = np.linspace(0.0, t, grid_n + 1)
    sample = sample_ou_paths([f], grid, params, initial, seed, n_paths)
    finals = sample.values[0][:, -1]
    empirical = complex(np.mean(np.exp(1j * finals)))
    analytic = ou_char_functional(f, t, params, initial)
    return empirical, analytic


def cholesky_marginal_sample(
    f: TestFunction,
    times,
    params: ModelParams,
    initial=ZeroMeasure(),
    seed: int = 0,
    n_paths: int = 1,
) -> np.ndarray:
    """Exact Gaussian sampler of (<Z(t_1), f>, ..., <Z(t_m), f>).

    Independent validation route for the path sampler: builds the Gram
    matrix from the covariance quadrature and applies its Cholesky factor.
    """
    times = np.asarray(times, dtype=float)
    m = len(times)
    gram = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            gram[i, j] = gram[j, i] = ou_covariance(
                f, f, float(times[i]), float(times[j]), params
            )
    gram += 1e-14 * np.eye(m) * max(1.0, np.max(np.abs(gram)))
    chol = np.linalg.cholesky(gram)
    key = rng.substream(seed, rng.TAG_OU, 1)
    gen = np.random.Generator(np.random.Philox(key=key))
    normals = gen.normal(0.0, 1.0, size=(n_paths, m))
    means = np.array([_mean_pairing(initial, f, t) for t in times])
    return means[None, :] + normals @ chol.T
