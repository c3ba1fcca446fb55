"""Simulation parameters, observable registration and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DegreeCapError
from ..kernels import ModelParams, TestFunction, generator_apply

__all__ = ["SimParams", "Observables", "branch_probability"]


def branch_probability(params: "SimParams", model: ModelParams) -> float:
    """Per-step branching probability inside the catalyst window.

    q = N * (sigma^2 / k^2) * dt / (2 eps): the per-particle branching rate
    must carry the particle density N for the empirical measure to converge
    to the measure-valued limit (each particle carries mass 1/N, so the
    aggregate branching activity per unit occupation stays N-independent).
    """
    return params.particles_per_unit * model.sigma2_eff * params.dt / (2.0 * params.eps)


@dataclass(frozen=True)
class SimParams:
    """Discretization and bookkeeping knobs of the branching-particle run.

    particles_per_unit is the initial Poisson intensity per unit length;
    each particle carries mass 1/particles_per_unit.  eps is the half-width
    of the mollified catalyst window, occupation_halfwidth the half-width of
    the occupation-density estimation windows (defaults to eps).
    """

    particles_per_unit: float = 200.0
    window_halfwidth: float = 8.0
    dt: float = 1e-4
    eps: float = 0.05
    horizon: float = 1.0
    seed: int = 20260809
    replicates: int = 1
    record_times: tuple = (1.0,)
    occupation_halfwidth: float | None = None
    population_cap_factor: float = 100.0
    store_snapshots: bool = True
    record_events: bool = False
    threads: int = 1
    backend: str = "auto"

    def __post_init__(self):
        if self.particles_per_unit <= 0:
            raise ConfigError("particles_per_unit must be positive")
        if self.window_halfwidth <= 0:
            raise ConfigError("window_halfwidth must be positive")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.dt > self.eps * self.eps * (1 + 1e-12):
            raise ConfigError(
                f"dt={self.dt} must not exceed eps^2={self.eps**2:.3g} "
                "(diffusive resolution of the catalyst window)"
            )
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.population_cap_factor <= 0:
            raise ConfigError("population_cap_factor must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.backend not in ("auto", "compiled", "python"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        n_steps = self.n_steps
        if abs(n_steps * self.dt - self.horizon) > 1e-9 * max(self.horizon, 1.0):
            raise ConfigError(
                f"horizon {self.horizon} is not an integer number of dt steps"
            )
        if not self.record_times:
            raise ConfigError("need at least one record time")
        prev = -1.0
        for t in self.record_times:
            if not 0.0 <= t <= self.horizon + 1e-12:
                raise ConfigError(f"record time {t} outside [0, horizon]")
            if t <= prev:
                raise ConfigError("record times must be strictly increasing")
            prev = t

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def eps_occ(self) -> float:
        return self.eps if self.occupation_halfwidth is None else self.occupation_halfwidth

    @property
    def mass(self) -> float:
        return 1.0 / self.particles_per_unit

    def record_steps(self) -> np.ndarray:
        steps = []
        for t in self.record_times:
            s = int(round(t / self.dt))
            if abs(s * self.dt - t) > 1e-9 * max(self.horizon, 1.0):
                raise ConfigError(f"record time {t} does not align with dt grid")
            steps.append(s)
        return np.asarray(steps, dtype=np.int64)

    def validate_against(self, model: ModelParams, observables: "Observables"):
        """Invariants that couple the discretization to model and observables."""
        q = branch_probability(self, model)
        if q > 0.5 + 1e-12:
            raise ConfigError(
                f"per-step branching probability q={q:.3g} exceeds 0.5; "
                "decrease dt or increase eps"
            )
        needed = abs(model.c) + 6.0 * math.sqrt(self.horizon)
        for f in observables.all_functions():
            needed = max(needed, _pairing_radius(f, model.c))
        if self.window_halfwidth < needed - 1e-9:
            raise ConfigError(
                f"window_halfwidth {self.window_halfwidth} below required "
                f"{needed:.3g} (catalyst drift range / observable support)"
            )
        for z in observables.occupation_points:
            if abs(z - model.c) > self.window_halfwidth:
                raise ConfigError(f"occupation point {z} outside the window")


def _pairing_radius(f: TestFunction, c: float) -> float:
    """Distance from the catalyst beyond which f is negligible (2-sigma rule
    per term; tails beyond contribute below the Monte Carlo floor)."""
    return max(abs(t.center - c) + 2.0 * t.width for t in f.terms)


@dataclass
class Observables:
    """What the engine tracks during a run.

    pair_functions are paired against branching and baseline systems at
    every record time.  occupation_points get trapezoid occupation-density
    accumulators at dt resolution.  martingale_functions get compensator
    and realized-quadratic-variation accumulators at dt resolution (their
    generator images are formed here, so the degree cap applies).
    """

    pair_functions: list = field(default_factory=list)
    occupation_points: list = field(default_factory=list)
    martingale_functions: list = field(default_factory=list)

    def __post_init__(self):
        self.pair_functions = list(self.pair_functions)
        self.occupation_points = [float(z) for z in self.occupation_points]
        self.martingale_functions = list(self.martingale_functions)
        try:
            self.martingale_generators = [
                generator_apply(f) for f in self.martingale_functions
            ]
        except DegreeCapError as exc:
            raise DegreeCapError(
                f"martingale tracking needs the generator image: {exc}"
            ) from exc

    def all_functions(self):
        return (
            self.pair_functions
            + self.martingale_functions
            + self.martingale_generators
        )

    def require_occupation_at(self, c: float):
        """Martingale predictions need the occupation clock at the catalyst."""
        if self.martingale_functions and c not in self.occupation_points:
            self.occupation_points.append(c)


def pack_functions(functions):
    """Flatten mixtures into arrays both engines consume identically.

    Returns (offsets, coeffs, degrees, centers, neg_half_inv_sq) where term
    j of function i occupies rows offsets[i]:offsets[i+1].  The Gaussian
    exponent factor -0.5/s^2 is precomputed here once so both engines
    evaluate exp((dx*dx) * factor) with identical operand bits.
    """
    offsets = [0]
    coeffs_rows = []
    degrees = []
    centers = []
    factors = []
    max_len = 1
    for f in functions:
        for term in f.terms:
            coeffs_rows.append(term.coeffs)
            degrees.append(term.degree)
            centers.append(term.center)
            factors.append(-0.5 / (term.width * term.width))
            max_len = max(max_len, len(term.coeffs))
        offsets.append(len(coeffs_rows))
    coeffs = np.zeros((max(len(coeffs_rows), 1), max_len))
    for i, row in enumerate(coeffs_rows):
        coeffs[i, : len(row)] = row
    return (
        np.asarray(offsets, dtype=np.int64),
        coeffs,
        np.asarray(degrees, dtype=np.int64),
        np.asarray(centers, dtype=float),
        np.asarray(factors, dtype=float),
    )
