import math

import numpy as np
import pytest

from sbmlab.errors import DegreeCapError, DomainError
from sbmlab.kernels import (
    TestFunction,
    adaptive_gauss_legendre,
    generator_apply,
    heat_kernel,
    heat_kernel_time_first_moment,
    heat_kernel_time_integral,
    lebesgue_pairing,
    semigroup_apply,
)

STD_GAUSS = TestFunction.gaussian()


def random_mixture(seed, n_terms=3, degree=4):
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(n_terms):
        coeffs = rng.normal(size=rng.integers(1, degree + 2))
        terms.append((tuple(coeffs), rng.normal() * 2.0, 0.3 + rng.random() * 2.0))
    return TestFunction(terms)


class TestHeatKernel:
    def test_standard_normal_density_at_zero(self):
        assert heat_kernel(1.0, 0.0) == pytest.approx(0.3989422804014327, abs=1e-12)

    def test_direct_value(self):
        # e^{-1}/sqrt(pi)
        assert heat_kernel(0.5, 1.0) == pytest.approx(0.2075537487102974, abs=1e-12)

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_unit_mass(self, t):
        mass = adaptive_gauss_legendre(
            lambda x: np.exp(-0.5 * x * x / t) / math.sqrt(2 * math.pi * t),
            -14.0 * math.sqrt(t),
            14.0 * math.sqrt(t),
            tol=1e-13,
        )
        assert mass == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_unimodal(self):
        xs = np.linspace(0.0, 5.0, 100)
        vals = np.array([heat_kernel(0.7, x) for x in xs])
        neg = np.array([heat_kernel(0.7, -x) for x in xs])
        assert np.allclose(vals, neg, rtol=0, atol=0)
        assert np.all(np.diff(vals) < 0)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(DomainError):
            heat_kernel(0.0, 1.0)
        with pytest.raises(DomainError):
            heat_kernel(-1.0, 0.0)


class TestTimeMoments:
    @pytest.mark.parametrize("t,d", [(1.0, 0.5), (0.2, 1.3), (3.0, 0.01), (0.5, 2.5)])
    def test_against_quadrature(self, t, d):
        kern = lambda tau: np.exp(-0.5 * d * d / tau) / np.sqrt(2 * np.pi * tau)
        k_quad = adaptive_gauss_legendre(kern, 1e-14, t, tol=1e-14)
        m_quad = adaptive_gauss_legendre(lambda tau: tau * kern(tau), 1e-14, t, tol=1e-14)
        assert heat_kernel_time_integral(t, d) == pytest.approx(k_quad, abs=1e-11)
        assert heat_kernel_time_first_moment(t, d) == pytest.approx(m_quad, abs=1e-11)

    def test_abel_values(self):
        assert heat_kernel_time_integral(1.0, 0.0) == pytest.approx(
            math.sqrt(2.0 / math.pi), abs=1e-15
        )
        assert heat_kernel_time_first_moment(1.0, 0.0) == pytest.approx(
            math.sqrt(2.0) / (3.0 * math.sqrt(math.pi)), abs=1e-15
        )


class TestSemigroup:
    def test_identity_at_zero(self):
        f = random_mixture(1)
        assert semigroup_apply(f, 0.0) is f

    def test_gaussian_closed_form(self):
        pf = semigroup_apply(STD_GAUSS, 1.0)
        assert pf(0.0) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-14)
        xs = np.linspace(-4, 4, 41)
        expected = np.exp(-xs * xs / 4.0) / math.sqrt(2.0)
        assert np.max(np.abs(pf(xs) - expected)) < 1e-14

    def test_gaussian_vs_quadrature(self):
        # P_1 f(x) = int p(1, y-x) f(y) dy, checked at a few x
        pf = semigroup_apply(STD_GAUSS, 1.0)
        for x in (-1.5, 0.0, 0.7):
            val = adaptive_gauss_legendre(
                lambda y: np.exp(-0.5 * (y - x) ** 2) / math.sqrt(2 * math.pi)
                * STD_GAUSS(y),
                -16.0,
                16.0,
                tol=1e-13,
            )
            assert pf(x) == pytest.approx(val, abs=1e-11)

    def test_semigroup_law_coefficientwise(self):
        f = random_mixture(7)
        once = semigroup_apply(f, 1.0)
        twice = semigroup_apply(semigroup_apply(f, 0.3), 0.7)
        assert len(once.terms) == len(twice.terms)
        for t1, t2 in zip(once.terms, twice.terms):
            assert t1.center == pytest.approx(t2.center, abs=1e-13)
            assert t1.width == pytest.approx(t2.width, abs=1e-13)
            c1 = np.zeros(9)
            c2 = np.zeros(9)
            c1[: len(t1.coeffs)] = t1.coeffs
            c2[: len(t2.coeffs)] = t2.coeffs
            assert np.max(np.abs(c1 - c2)) < 1e-12

    def test_preserves_lebesgue_pairing(self):
        for seed in range(4):
            f = random_mixture(seed)
            base = lebesgue_pairing(f)
            for t in (0.1, 1.0, 7.0):
                assert lebesgue_pairing(semigroup_apply(f, t)) == pytest.approx(
                    base, rel=1e-12, abs=1e-12
                )

    def test_positivity_preserving(self):
        f = TestFunction([((1.0,), -1.0, 0.5), ((0.4,), 2.0, 1.5)])
        xs = f.grid()
        for t in (0.05, 0.5, 3.0):
            assert np.min(semigroup_apply(f, t)(xs)) >= 0.0

    def test_rejects_negative_time(self):
        with pytest.raises(DomainError):
            semigroup_apply(STD_GAUSS, -0.1)


class TestGenerator:
    def test_gaussian_at_zero(self):
        af = generator_apply(STD_GAUSS)
        assert af(0.0) == pytest.approx(-0.5, abs=1e-14)

    def test_against_sympy(self):
        import sympy as sp

        f = random_mixture(3)
        af = generator_apply(f)
        x = sp.Symbol("x")
        expr = sum(
            sum(c * x**j for j, c in enumerate(t.coeffs))
            * sp.exp(-((x - t.center) ** 2) / (2 * t.width**2))
            for t in f.terms
        )
        half_second = sp.diff(expr, x, 2) / 2
        for xv in (-1.2, 0.0, 0.4, 2.3):
            expected = float(half_second.subs(x, xv))
            assert af(xv) == pytest.approx(expected, rel=1e-10, abs=1e-12)

    def test_finite_difference_rate(self):
        f = random_mixture(5)
        af = generator_apply(f)
        for x in (-1.0, 0.0, 2.0):
            errs = []
            for h in (1e-2, 1e-3):
                fd = (semigroup_apply(f, h)(x) - f(x)) / h
                errs.append(abs(af(x) - fd))
            # first-order convergence of the semigroup difference quotient
            assert errs[1] < 0.2 * errs[0] + 1e-12

    def test_zero_function(self):
        z = TestFunction.zero()
        az = generator_apply(z)
        xs = np.linspace(-3, 3, 7)
        assert np.all(az(xs) == 0.0)

    def test_commutes_with_semigroup(self):
        f = random_mixture(11, degree=3)
        lhs = generator_apply(semigroup_apply(f, 0.8))
        rhs = semigroup_apply(generator_apply(f), 0.8)
        xs = np.linspace(-6, 6, 101)
        assert np.max(np.abs(lhs(xs) - rhs(xs))) < 1e-12

    def test_degree_cap_overflow(self):
        f = TestFunction([((1.0,) * 8, 0.0, 1.0)], degree_cap=8)
        with pytest.raises(DegreeCapError):
            generator_apply(f)


class TestLebesguePairing:
    def test_gaussian_value(self):
        assert lebesgue_pairing(STD_GAUSS) == pytest.approx(
            math.sqrt(2 * math.pi), abs=1e-14
        )

    def test_vs_quadrature(self):
        f = random_mixture(9)
        r = f.support_radius(1e-14)
        val = adaptive_gauss_legendre(f, -r, r, tol=1e-13)
        assert lebesgue_pairing(f) == pytest.approx(val, rel=1e-10, abs=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_generator_integrates_to_zero(self, seed):
        f = random_mixture(seed, degree=4)
        scale = 1.0 + abs(lebesgue_pairing(f))
        assert abs(lebesgue_pairing(generator_apply(f))) < 1e-12 * scale

    def test_linearity(self):
        f, g = random_mixture(1), random_mixture(2)
        combo = 2.5 * f + (-1.25) * g
        assert lebesgue_pairing(combo) == pytest.approx(
            2.5 * lebesgue_pairing(f) - 1.25 * lebesgue_pairing(g), rel=1e-12
        )


class TestAlgebraAndSerialization:
    def test_product_matches_pointwise(self):
        f, g = random_mixture(4, degree=2), random_mixture(5, degree=2)
        prod = f * g
        xs = np.linspace(-5, 5, 201)
        assert np.max(np.abs(prod(xs) - f(xs) * g(xs))) < 1e-11

    def test_product_degree_cap(self):
        f = TestFunction([((1.0,) * 6, 0.0, 1.0)])
        with pytest.raises(DegreeCapError):
            f * f

    def test_width_must_be_positive(self):
        with pytest.raises(DomainError):
            TestFunction([((1.0,), 0.0, 0.0)])

    def test_json_roundtrip_exact(self):
        f = random_mixture(12)
        back = TestFunction.from_json(f.to_json())
        assert len(back.terms) == len(f.terms)
        for t1, t2 in zip(back.terms, f.terms):
            assert t1.coeffs == t2.coeffs
            assert t1.center == t2.center
            assert t1.width == t2.width

    def test_json_digits(self):
        text = TestFunction.gaussian(amplitude=1 / 3).to_json()
        assert "0.33333333333333331" in text
