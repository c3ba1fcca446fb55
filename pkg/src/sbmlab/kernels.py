"""Brownian transition kernel and an analytically closed test-function family.

Everything downstream of this module manipulates functions of the form

    f(x) = sum_j  p_j(x) * exp(-(x - m_j)^2 / (2 s_j^2)),

a finite mixture of polynomial-times-Gaussian terms.  The family is closed
under addition, scalar multiplication, differentiation, pointwise products
and the heat semigroup, so the transition density, the generator Delta/2 and
Lebesgue pairings all evaluate in closed form; no numerical convolution
appears anywhere on the primary code paths.  Quadrature lives here only as a
cross-check tool for oracles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import erfc

from .errors import DegreeCapError, DomainError

__all__ = [
    "DEFAULT_DEGREE_CAP",
    "SQRT_TWO_PI",
    "GaussTerm",
    "TestFunction",
    "ModelParams",
    "Lebesgue",
    "DensityMeasure",
    "ZeroMeasure",
    "heat_kernel",
    "heat_kernel_time_integral",
    "heat_kernel_time_first_moment",
    "semigroup_apply",
    "generator_apply",
    "lebesgue_pairing",
    "adaptive_gauss_legendre",
]

DEFAULT_DEGREE_CAP = 8
SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def heat_kernel(t: float, x: float) -> float:
    """Brownian transition density p(t, x) = (2 pi t)^(-1/2) exp(-x^2/2t)."""
    if t <= 0.0:
        raise DomainError(f"heat_kernel requires t > 0, got t={t}")
    return math.exp(-0.5 * x * x / t) / math.sqrt(2.0 * math.pi * t)


def heat_kernel_time_integral(t, d):
    """Cumulative kernel mass K(t, d) = int_0^t p(tau, d) dtau.

    Closed form: sqrt(2t/pi) exp(-d^2/2t) - |d| erfc(|d| / sqrt(2t)).
    Vectorized in t; d is a scalar displacement.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    if np.any(pos):
        tp = t[pos]
        ad = abs(float(d))
        if ad == 0.0:
            out[pos] = np.sqrt(2.0 * tp / math.pi)
        else:
            z = ad / np.sqrt(2.0 * tp)
            out[pos] = np.sqrt(2.0 * tp / math.pi) * np.exp(-z * z) - ad * erfc(z)
    return out if out.ndim else float(out)


def heat_kernel_time_first_moment(t, d):
    """First time moment M1(t, d) = int_0^t tau p(tau, d) dtau.

    Closed form: sqrt(2t) (t - d^2) exp(-d^2/2t) / (3 sqrt(pi))
                 + |d|^3 erfc(|d| / sqrt(2t)) / 3.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    if np.any(pos):
        tp = t[pos]
        ad = abs(float(d))
        if ad == 0.0:
            out[pos] = math.sqrt(2.0) * tp ** 1.5 / (3.0 * math.sqrt(math.pi))
        else:
            z = ad / np.sqrt(2.0 * tp)
            out[pos] = (
                np.sqrt(2.0 * tp) * (tp - ad * ad) * np.exp(-z * z)
                / (3.0 * math.sqrt(math.pi))
                + ad ** 3 * erfc(z) / 3.0
            )
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussTerm:
    """One polynomial-times-Gaussian term; coeffs ascending in degree."""

    coeffs: tuple
    center: float
    width: float

    def __post_init__(self):
        if self.width <= 0.0:
            raise DomainError(f"term width must be positive, got {self.width}")
        if len(self.coeffs) == 0:
            raise DomainError("term needs at least one coefficient")

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        dx = x - self.center
        val = npoly.polyval(x, np.asarray(self.coeffs)) * np.exp(
            -0.5 * dx * dx / (self.width * self.width)
        )
        return val if val.ndim else float(val)


def _heat_on_poly(coeffs, nu):
    """Apply exp((nu/2) d^2/dx^2) to a polynomial: finite Gaussian-moment sum."""
    c = np.asarray(coeffs, dtype=float)
    out = c.copy()
    term = c
    fac = 1.0
    for n in range(1, len(c) // 2 + 1):
        term = npoly.polyder(term, 2)
        if term.size == 0:
            break
        fac *= 0.5 * nu / n
        out = npoly.polyadd(out, fac * term)
    return out


def _affine_compose(coeffs, a, b):
    """Coefficients of p(a*x + b) given those of p."""
    out = np.zeros(1)
    for ck in np.asarray(coeffs, dtype=float)[::-1]:
        out = npoly.polyadd(npoly.polymul(out, [b, a]), [ck])
    return out


class TestFunction:
    """Finite polynomial-times-Gaussian mixture standing in for a rapidly
    decreasing test function.

    Parameters
    ----------
    terms : iterable of (coeffs, center, width) or GaussTerm
    degree_cap : int
        Hard cap on the polynomial degree of every term.  Operations that
        would exceed it (second derivatives, products) raise
        :class:`DegreeCapError` rather than truncating.
    """

    def __init__(self, terms, degree_cap: int = DEFAULT_DEGREE_CAP):
        parsed = []
        for term in terms:
            if not isinstance(term, GaussTerm):
                coeffs, m, s = term
                term = GaussTerm(tuple(float(c) for c in coeffs), float(m), float(s))
            if term.degree > degree_cap:
                raise DegreeCapError(
                    f"term degree {term.degree} exceeds cap {degree_cap}"
                )
            parsed.append(term)
        self.terms = tuple(parsed)
        self.degree_cap = degree_cap

    # -- constructors ------------------------------------------------------

    @staticmethod
    def gaussian(amplitude=1.0, center=0.0, width=1.0, degree_cap=DEFAULT_DEGREE_CAP):
        """amplitude * exp(-(x-center)^2 / (2 width^2))."""
        return TestFunction([((amplitude,), center, width)], degree_cap)

    @staticmethod
    def zero(degree_cap=DEFAULT_DEGREE_CAP):
        return TestFunction([((0.0,), 0.0, 1.0)], degree_cap)

    # -- basic algebra -----------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for term in self.terms:
            total = total + term(x)
        return total if total.ndim else float(total)

    def __add__(self, other):
        cap = max(self.degree_cap, other.degree_cap)
        return TestFunction(self.terms + other.terms, cap)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        scalar = float(scalar)
        return TestFunction(
            [
                GaussTerm(tuple(scalar * c for c in t.coeffs), t.center, t.width)
                for t in self.terms
            ],
            self.degree_cap,
        )

    def __mul__(self, other):
        """Pointwise product of two mixtures (Gaussians merge exactly)."""
        if not isinstance(other, TestFunction):
            return self.__rmul__(other)
        cap = max(self.degree_cap, other.degree_cap)
        terms = []
        for t1 in self.terms:
            for t2 in other.terms:
                v1, v2 = t1.width ** 2, t2.width ** 2
                vsum = v1 + v2
                width = math.sqrt(v1 * v2 / vsum)
                center = (t1.center * v2 + t2.center * v1) / vsum
                pref = math.exp(-0.5 * (t1.center - t2.center) ** 2 / vsum)
                coeffs = pref * npoly.polymul(t1.coeffs, t2.coeffs)
                if len(coeffs) - 1 > cap:
                    raise DegreeCapError(
                        f"product degree {len(coeffs) - 1} exceeds cap {cap}"
                    )
                terms.append(GaussTerm(tuple(coeffs), center, width))
        return TestFunction(terms, cap)

    def derivative(self):
        """First derivative (degree grows by one)."""
        terms = []
        for t in self.terms:
            p = np.asarray(t.coeffs, dtype=float)
            # (p G)' = (p' - p (x - m)/s^2) G
            shifted = npoly.polymul(p, [-t.center, 1.0]) / (t.width ** 2)
            coeffs = npoly.polysub(npoly.polyder(p), shifted)
            if len(coeffs) - 1 > self.degree_cap:
                raise DegreeCapError(
                    f"derivative degree {len(coeffs) - 1} exceeds cap "
                    f"{self.degree_cap}"
                )
            terms.append(GaussTerm(tuple(coeffs), t.center, t.width))
        return TestFunction(terms, self.degree_cap)

    # -- misc --------------------------------------------------------------

    def support_radius(self, reltol=1e-8):
        """Radius beyond which |f| is below reltol * (scale of f).

        Conservative per-term bound from the Gaussian factor alone.
        """
        radius = 0.0
        for t in self.terms:
            scale = max(abs(c) for c in t.coeffs) + 1.0
            # |p(x)| <= scale * (1+|x|)^d; solve Gaussian decay generously
            r = 1.0
            while r < 1e3:
                bound = scale * (1.0 + abs(t.center) + r) ** t.degree * math.exp(
                    -0.5 * (r / t.width) ** 2
                )
                if bound < reltol:
                    break
                r += 0.5 * t.width
            radius = max(radius, abs(t.center) + r)
        return radius

    def grid(self, points_per_term=801, spread=12.0):
        """Sampling grid covering all terms, for verification sweeps."""
        pieces = [
            np.linspace(t.center - spread * t.width, t.center + spread * t.width,
                        points_per_term)
            for t in self.terms
        ]
        return np.unique(np.concatenate(pieces))

    def is_nonnegative(self, tol=1e-12):
        vals = self(self.grid())
        scale = float(np.max(np.abs(vals))) + 1.0
        return bool(np.min(vals) >= -tol * scale)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        """JSON array of terms; floats rendered with 17 significant digits.

        17 significant digits identify a double uniquely, so the round-trip
        through :meth:`from_json` is exact.
        """
        parts = []
        for t in self.terms:
            coeffs = ",".join(f"{c:.17g}" for c in t.coeffs)
            parts.append(
                '{"coeffs":[%s],"m":%s,"s":%s}'
                % (coeffs, f"{t.center:.17g}", f"{t.width:.17g}")
            )
        return "[" + ",".join(parts) + "]"

    @staticmethod
    def from_json(text: str, degree_cap: int = DEFAULT_DEGREE_CAP):
        data = json.loads(text)
        return TestFunction(
            [(tuple(d["coeffs"]), d["m"], d["s"]) for d in data], degree_cap
        )

    def __repr__(self):
        parts = ", ".join(
            f"(deg={t.degree}, m={t.center:g}, s={t.width:g})" for t in self.terms
        )
        return f"TestFunction[{parts}]"


def semigroup_apply(f: TestFunction, t: float) -> TestFunction:
    """Heat semigroup P_t f, exactly, term by term.

    Each term (p, m, s) maps to (q, m, sqrt(s^2 + t)) where q collects the
    Gaussian-convolution moment identities:

        q(x) = s/sqrt(s^2+t) * r(a x + b),   r = exp((nu/2) d^2/dy^2) p,
        a = s^2/(s^2+t),  b = m t/(s^2+t),  nu = t s^2/(s^2+t).
    """
    if t < 0.0:
        raise DomainError(f"semigroup time must be >= 0, got {t}")
    if t == 0.0:
        return f
    terms = []
    for term in f.terms:
        v = term.width ** 2
        denom = v + t
        a = v / denom
        b = term.center * t / denom
        nu = t * v / denom
        amp = math.sqrt(v / denom)
        r = _heat_on_poly(term.coeffs, nu)
        q = amp * _affine_compose(r, a, b)
        terms.append(GaussTerm(tuple(q), term.center, math.sqrt(denom)))
    return TestFunction(terms, f.degree_cap)


def generator_apply(f: TestFunction) -> TestFunction:
    """Generator A = Delta/2 acting on f: returns f''/2 (degree grows by 2)."""
    return 0.5 * f.derivative().derivative()


def lebesgue_pairing(f: TestFunction) -> float:
    """Exact integral of f over the line against Lebesgue measure."""
    total = 0.0
    for term in f.terms:
        r = _heat_on_poly(term.coeffs, term.width ** 2)
        total += SQRT_TWO_PI * term.width * float(npoly.polyval(term.center, r))
    return total


# ---------------------------------------------------------------------------
# Initial measures
# ---------------------------------------------------------------------------


class Lebesgue:
    """Lebesgue measure on the line (the stationary mean of the process)."""

    def __repr__(self):
        return "Lebesgue()"

    def __eq__(self, other):
        return isinstance(other, Lebesgue)


class DensityMeasure:
    """Absolutely continuous initial measure with a mixture density."""

    def __init__(self, density: TestFunction):
        if not density.is_nonnegative():
            raise DomainError("initial density must be nonnegative")
        self.density = density

    def __repr__(self):
        return f"DensityMeasure({self.density!r})"


class ZeroMeasure:
    """Zero initial state (used for the centered fluctuation limit)."""

    def __repr__(self):
        return "ZeroMeasure()"

    def __eq__(self, other):
        return isinstance(other, ZeroMeasure)


@dataclass(frozen=True)
class ModelParams:
    """Model constants: catalyst position c, branching intensity sigma^2 and
    fluctuation index k (the effective intensity is sigma2 / k^2)."""

    c: float = 0.0
    sigma2: float = 1.0
    k: int = 1

    def __post_init__(self):
        if self.sigma2 < 0.0:
            raise DomainError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.k < 1 or int(self.k) != self.k:
            raise DomainError(f"k must be a positive integer, got {self.k}")

    @property
    def sigma2_eff(self) -> float:
        return self.sigma2 / (self.k * self.k)


# ---------------------------------------------------------------------------
# Quadrature (oracle/cross-check tool only; closed forms are primary)
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _gl_panel(func, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(_GL_WEIGHTS * func(mid + half * _GL_NODES)))


def adaptive_gauss_legendre(func, a, b, tol=1e-12, max_depth=24):
    """Adaptive 20-point Gauss-Legendre with interval bisection.

    The split criterion bottoms out at a few ulps of the panel magnitude, so
    tolerances near machine precision terminate instead of recursing forever.
    """

    def recurse(a, b, whole, tol, depth):
        mid = 0.5 * (a + b)
        left = _gl_panel(func, a, mid)
        right = _gl_panel(func, mid, b)
        floor = 5e-16 * (abs(left) + abs(right))
        if depth >= max_depth or abs(left + right - whole) <= max(tol, floor):
            return left + right
        return recurse(a, mid, left, 0.5 * tol, depth + 1) + recurse(
            mid, b, right, 0.5 * tol, depth + 1
        )

    return recurse(a, b, _gl_panel(func, a, b), tol, 0)
