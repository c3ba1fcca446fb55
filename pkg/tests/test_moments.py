import cmath
import math

import numpy as np
import pytest

from sbmlab.kernels import (
    DensityMeasure,
    Lebesgue,
    ModelParams,
    TestFunction,
    ZeroMeasure,
    lebesgue_pairing,
)
from sbmlab.moments import (
    fluctuation_second_moment,
    mean_mass,
    mean_occupation,
    ou_char_functional,
    ou_covariance,
    var_mass,
    var_occupation,
)

from sbmlab.oracles import var_mass_oracle, var_occupation_oracle

STD_GAUSS = TestFunction.gaussian()
BENCH = ModelParams(c=0.0, sigma2=1.0, k=1)
LN2 = math.log(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)


class TestMeanMass:
    @pytest.mark.parametrize("t", [0.0, 1.0, 10.0])
    def test_lebesgue_time_invariant(self, t):
        assert mean_mass(Lebesgue(), STD_GAUSS, t) == pytest.approx(
            SQRT_2PI, abs=1e-12
        )

    def test_density_at_time_zero(self):
        dens = TestFunction.gaussian(amplitude=0.8, center=1.0, width=0.7)
        expected = lebesgue_pairing(DensityMeasure(dens).density * STD_GAUSS)
        assert mean_mass(DensityMeasure(dens), STD_GAUSS, 0.0) == pytest.approx(
            expected, rel=1e-12
        )

    def test_density_spreads_by_heat_flow(self):
        dens = TestFunction.gaussian(center=0.0, width=0.5)
        v1 = mean_mass(DensityMeasure(dens), STD_GAUSS, 0.2)
        v2 = mean_mass(DensityMeasure(dens), STD_GAUSS, 5.0)
        # pairing against a bump decays as the density flattens out
        assert v2 < v1


class TestVarMass:
    def test_benchmark_log2(self):
        # P_s f(0)^2 = 1/(1+s) for the unit Gaussian, so the integral is ln 2
        assert var_mass(Lebesgue(), STD_GAUSS, 1.0, BENCH) == pytest.approx(
            LN2, abs=1e-10
        )

    def test_against_nested_quadrature_oracle(self):
        val = var_mass(Lebesgue(), STD_GAUSS, 1.0, BENCH)
        assert val == pytest.approx(var_mass_oracle(STD_GAUSS, 1.0, BENCH), abs=1e-9)

    def test_zero_cases(self):
        assert var_mass(Lebesgue(), STD_GAUSS, 1.0, ModelParams(sigma2=0.0)) == 0.0
        assert var_mass(Lebesgue(), STD_GAUSS, 0.0, BENCH) == 0.0

    def test_k_scaling(self):
        v1 = var_mass(Lebesgue(), STD_GAUSS, 1.0, BENCH)
        v2 = var_mass(Lebesgue(), STD_GAUSS, 1.0, ModelParams(sigma2=1.0, k=2))
        assert v2 == pytest.approx(v1 / 4.0, rel=1e-10)

    def test_nondecreasing_in_t_and_linear_in_sigma2(self):
        ts = [0.25, 0.5, 1.0, 2.0]
        vals = [var_mass(Lebesgue(), STD_GAUSS, t, BENCH) for t in ts]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        doubled = var_mass(Lebesgue(), STD_GAUSS, 1.0, ModelParams(sigma2=2.0))
        assert doubled == pytest.approx(2.0 * vals[2], rel=1e-10)


class TestMeanOccupation:
    def test_lebesgue_equals_t(self):
        for z in (-2.0, 0.0, 1.3):
            assert mean_occupation(Lebesgue(), z, 1.0) == 1.0
        assert mean_occupation(Lebesgue(), 0.5, 0.0) == 0.0

    def test_narrow_density_approximates_abel_integral(self):
        # near-delta initial mass at 0 gives roughly int_0^1 p(s, 0) ds
        dens = TestFunction.gaussian(
            amplitude=1.0 / (math.sqrt(2 * math.pi) * 0.02), width=0.02
        )
        val = mean_occupation(DensityMeasure(dens), 0.0, 1.0)
        assert val == pytest.approx(math.sqrt(2.0 / math.pi), rel=0.02)


class TestVarOccupation:
    def test_closed_form_at_catalyst(self):
        assert var_occupation(Lebesgue(), 0.0, 1.0, BENCH) == pytest.approx(
            1.0 / math.pi, abs=1e-12
        )

    def test_k2_scaling(self):
        val = var_occupation(Lebesgue(), 0.0, 1.0, ModelParams(sigma2=1.0, k=2))
        assert val == pytest.approx(1.0 / (4.0 * math.pi), abs=1e-12)

    def test_against_nested_quadrature_oracle(self):
        val = var_occupation(Lebesgue(), 0.0, 1.0, BENCH)
        assert val == pytest.approx(
            var_occupation_oracle(0.0, 1.0, BENCH), abs=1e-9
        )

    def test_off_catalyst_against_oracle(self):
        val = var_occupation(Lebesgue(), 0.7, 1.0, BENCH)
        oracle = var_occupation_oracle(0.7, 1.0, BENCH)
        assert val == pytest.approx(oracle, abs=1e-8)
        assert val < var_occupation(Lebesgue(), 0.0, 1.0, BENCH)

    def test_time_zero(self):
        assert var_occupation(Lebesgue(), 0.0, 0.0, BENCH) == 0.0


class TestFluctuationSecondMoment:
    def test_value_and_k_invariance(self):
        vals = [
            fluctuation_second_moment(STD_GAUSS, 1.0, ModelParams(sigma2=1.0, k=k))
            for k in (1, 2, 4, 8)
        ]
        assert vals[0] == pytest.approx(LN2, abs=1e-10)
        # bit-identical across k: the implementation never reads k
        assert all(v == vals[0] for v in vals)

    def test_depends_on_semigroup_not_pointvalue(self):
        # odd bump vanishes at the catalyst and stays odd under heat flow
        odd = TestFunction([((0.0, 1.0), 0.0, 1.0)])
        assert odd(0.0) == 0.0
        assert fluctuation_second_moment(odd, 1.0, BENCH) == pytest.approx(
            0.0, abs=1e-12
        )
        shifted = TestFunction.gaussian(center=2.0)
        assert shifted(0.0) < 0.2
        assert fluctuation_second_moment(shifted, 1.0, BENCH) > 0.0

    def test_time_zero(self):
        assert fluctuation_second_moment(STD_GAUSS, 0.0, BENCH) == 0.0

    def test_matches_var_mass_at_k1(self):
        assert fluctuation_second_moment(STD_GAUSS, 1.0, BENCH) == pytest.approx(
            var_mass(Lebesgue(), STD_GAUSS, 1.0, BENCH), abs=1e-10
        )


class TestOuCovariance:
    def test_diagonal_log2(self):
        assert ou_covariance(STD_GAUSS, STD_GAUSS, 1.0, 1.0, BENCH) == pytest.approx(
            LN2, abs=1e-10
        )

    def test_zero_overlap(self):
        assert ou_covariance(STD_GAUSS, STD_GAUSS, 0.0, 1.0, BENCH) == 0.0

    def test_symmetry(self):
        g = TestFunction.gaussian(center=0.5, width=1.5)
        a = ou_covariance(STD_GAUSS, g, 0.7, 1.3, BENCH)
        b = ou_covariance(g, STD_GAUSS, 1.3, 0.7, BENCH)
        assert a == pytest.approx(b, rel=1e-12)

    def test_consistency_with_fluctuation_moment(self):
        for t in (0.5, 1.0, 2.0):
            assert ou_covariance(STD_GAUSS, STD_GAUSS, t, t, BENCH) == pytest.approx(
                fluctuation_second_moment(STD_GAUSS, t, BENCH), abs=1e-10
            )

    def test_gram_matrix_positive_semidefinite(self):
        fs = [
            STD_GAUSS,
            TestFunction.gaussian(center=1.0, width=0.8),
            TestFunction([((0.2, 0.5), -0.5, 1.2)]),
        ]
        ts = [0.4, 1.0, 1.7]
        gram = np.array(
            [
                [ou_covariance(fi, fj, ti, tj, BENCH) for fj, tj in zip(fs, ts)]
                for fi, ti in zip(fs, ts)
            ]
        )
        eigs = np.linalg.eigvalsh(0.5 * (gram + gram.T))
        assert eigs.min() >= -1e-10


class TestOuCharFunctional:
    def test_zero_function(self):
        assert ou_char_functional(TestFunction.zero(), 1.0, BENCH) == 1.0

    def test_modulus_benchmark(self):
        val = ou_char_functional(STD_GAUSS, 1.0, BENCH)
        assert abs(val) == pytest.approx(math.exp(-0.5 * LN2), abs=1e-10)
        assert abs(val) == pytest.approx(0.7071067811865476, abs=1e-8)

    def test_lebesgue_phase(self):
        val = ou_char_functional(STD_GAUSS, 1.0, BENCH, initial=Lebesgue())
        # phase is <lambda, f> = sqrt(2 pi), which lies inside (-pi, pi]
        assert cmath.phase(val) == pytest.approx(SQRT_2PI, abs=1e-8)
        assert abs(val) == pytest.approx(math.exp(-0.5 * LN2), abs=1e-10)

    def test_modulus_bounded_by_one(self):
        for t in (0.0, 0.3, 2.0):
            v = ou_char_functional(STD_GAUSS, t, BENCH)
            assert abs(v) <= 1.0 + 1e-15
        assert abs(ou_char_functional(STD_GAUSS, 0.0, BENCH)) == 1.0
