import math

import numpy as np
import pytest

from sbmlab.errors import DomainError
from sbmlab.evolution import (
    density_points_forcing,
    laplace_density_field,
    laplace_functional,
    laplace_occupation,
    occupation_points_forcing,
    reconstruct_solution,
    semigroup_forcing,
    solve_catalyst_trace,
    trace_to_csv,
)
from sbmlab.kernels import (
    DensityMeasure,
    Lebesgue,
    ModelParams,
    TestFunction,
    lebesgue_pairing,
    semigroup_apply,
)

from sbmlab.oracles import picard_field, picard_trace

STD_GAUSS = TestFunction.gaussian()
BENCH = ModelParams(c=0.0, sigma2=1.0, k=1)


class TestTraceSolver:
    def test_zero_intensity_returns_forcing(self):
        params = ModelParams(c=0.0, sigma2=0.0)
        trace = solve_catalyst_trace(semigroup_forcing(STD_GAUSS), params, 1.0, 256)
        g = np.array([semigroup_apply(STD_GAUSS, t)(0.0) for t in trace.grid])
        assert np.max(np.abs(trace.values - g)) <= 1e-12

    def test_zero_forcing_gives_zero(self):
        forcing = occupation_points_forcing([0.0], [0.3])
        trace = solve_catalyst_trace(forcing, BENCH, 1.0, 128)
        assert np.all(trace.values == 0.0)

    def test_benchmark_against_picard_oracle(self):
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, BENCH, 1.0, 2**12)
        grid_o, w_o = picard_trace(forcing, BENCH, 1.0, 2**14)
        w_interp = np.interp(trace.grid, grid_o, w_o)
        assert np.max(np.abs(trace.values - w_interp)) <= 1e-5

    def test_grid_convergence_order(self):
        forcing = semigroup_forcing(STD_GAUSS)
        sups = []
        for p in (8, 9, 10, 11, 12):
            coarse = solve_catalyst_trace(forcing, BENCH, 1.0, 2**p)
            fine = solve_catalyst_trace(forcing, BENCH, 1.0, 2 ** (p + 1))
            sups.append(np.max(np.abs(fine.values[::2] - coarse.values)))
        ratios = [sups[i] / sups[i + 1] for i in range(len(sups) - 1)]
        assert min(ratios) >= 2.0

    def test_domination_and_positivity(self):
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, BENCH, 2.0, 512)
        assert np.all(trace.values >= 0.0)
        assert np.all(trace.values <= trace.forcing_values + 1e-12)

    def test_monotone_in_sigma2(self):
        forcing = semigroup_forcing(STD_GAUSS)
        w1 = solve_catalyst_trace(forcing, ModelParams(sigma2=0.5), 1.0, 512).values
        w2 = solve_catalyst_trace(forcing, ModelParams(sigma2=2.0), 1.0, 512).values
        assert np.all(w2[1:] < w1[1:] + 1e-14)

    def test_k_scaling_matches_reduced_sigma(self):
        forcing = semigroup_forcing(STD_GAUSS)
        wk = solve_catalyst_trace(forcing, ModelParams(sigma2=1.0, k=2), 1.0, 256)
        ws = solve_catalyst_trace(forcing, ModelParams(sigma2=0.25, k=1), 1.0, 256)
        assert np.max(np.abs(wk.values - ws.values)) < 1e-14

    def test_rejects_bad_grid(self):
        with pytest.raises(DomainError):
            solve_catalyst_trace(semigroup_forcing(STD_GAUSS), BENCH, 0.0, 64)
        with pytest.raises(DomainError):
            solve_catalyst_trace(semigroup_forcing(STD_GAUSS), BENCH, 1.0, 1)

    def test_csv_export(self):
        trace = solve_catalyst_trace(semigroup_forcing(STD_GAUSS), BENCH, 0.5, 8)
        text = trace_to_csv(trace)
        lines = text.strip().split("\n")
        assert lines[0] == "t,w"
        assert len(lines) == 10
        t, w = lines[3].split(",")
        assert float(t) == trace.grid[2]
        assert float(w) == trace.values[2]


class TestReconstruct:
    def test_consistency_with_trace_at_catalyst(self):
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, BENCH, 1.0, 1024)
        for i in (64, 300, 1024):
            v = reconstruct_solution(trace, forcing, trace.grid[i], BENCH.c)
            assert v == pytest.approx(trace.values[i], abs=2e-12)

    def test_zero_intensity_equals_semigroup(self):
        params = ModelParams(sigma2=0.0)
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, params, 1.0, 128)
        for x in (-1.0, 0.4, 2.0):
            v = reconstruct_solution(trace, forcing, 1.0, x)
            assert v == pytest.approx(semigroup_apply(STD_GAUSS, 1.0)(x), abs=1e-14)

    def test_against_picard_field(self):
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, BENCH, 1.0, 2**12)
        v = reconstruct_solution(trace, forcing, 1.0, 2.0)
        v_oracle = picard_field(forcing, BENCH, 1.0, 2**14, 2.0)
        assert v == pytest.approx(v_oracle, abs=1e-5)

    def test_off_grid_time(self):
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, BENCH, 1.0, 1024)
        t_mid = 0.5 * (trace.grid[500] + trace.grid[501])
        v = reconstruct_solution(trace, forcing, t_mid, 0.0)
        assert trace.values[510] < v < trace.values[490]

    def test_rejects_time_outside_range(self):
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, BENCH, 1.0, 64)
        with pytest.raises(DomainError):
            reconstruct_solution(trace, forcing, 0.0, 1.0)
        with pytest.raises(DomainError):
            reconstruct_solution(trace, forcing, 1.5, 1.0)


class TestLaplaceFunctional:
    def test_zero_function_gives_one(self):
        assert laplace_functional(TestFunction.zero(), BENCH, 1.0, Lebesgue()) == 1.0

    def test_zero_intensity_closed_form(self):
        params = ModelParams(sigma2=0.0)
        dens = TestFunction.gaussian(amplitude=0.7, center=0.5, width=1.2)
        val = laplace_functional(STD_GAUSS, params, 1.0, DensityMeasure(dens))
        expected = math.exp(-lebesgue_pairing(dens * semigroup_apply(STD_GAUSS, 1.0)))
        assert val == pytest.approx(expected, abs=1e-10)

    def test_lebesgue_collapse_identity(self):
        # <lambda, V_t f> = <lambda, f> - (sigma_eff^2/2) int_0^t w(s)^2 ds,
        # an exact consequence of integrating the evolution equation in x.
        forcing = semigroup_forcing(STD_GAUSS)
        trace = solve_catalyst_trace(forcing, BENCH, 1.0, 2**12)
        u = trace.values**2
        collapse = lebesgue_pairing(STD_GAUSS) - 0.5 * BENCH.sigma2_eff * float(
            np.trapezoid(u, trace.grid)
        )
        val = laplace_functional(STD_GAUSS, BENCH, 1.0, Lebesgue(), n=2**12)
        assert val == pytest.approx(math.exp(-collapse), rel=1e-6)

    def test_rejects_negative_function(self):
        f = TestFunction([((-1.0,), 0.0, 1.0)])
        with pytest.raises(DomainError):
            laplace_functional(f, BENCH, 1.0, Lebesgue())

    def test_monotone_in_theta(self):
        vals = [
            laplace_functional(theta * STD_GAUSS, BENCH, 0.5, Lebesgue(), n=512)
            for theta in (0.1, 0.5, 1.0, 2.0)
        ]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert all(0.0 < v <= 1.0 for v in vals)


class TestLaplaceDensityField:
    def test_zero_weights_give_one(self):
        assert laplace_density_field([0.0, 0.0], [1.0, -0.5], BENCH, 1.0) == 1.0

    def test_zero_intensity_kernel_mass(self):
        params = ModelParams(sigma2=0.0)
        val = laplace_density_field([0.7, 0.4], [1.0, -2.0], params, 1.0)
        assert val == pytest.approx(math.exp(-(0.7 + 0.4)), rel=1e-9)

    def test_rejects_point_at_catalyst(self):
        with pytest.raises(DomainError):
            laplace_density_field([1.0], [0.0], BENCH, 1.0)

    def test_rejects_zero_time(self):
        with pytest.raises(DomainError):
            laplace_density_field([1.0], [1.0], BENCH, 0.0)


class TestLaplaceOccupation:
    def test_time_zero_gives_one(self):
        assert laplace_occupation([1.0], [0.0], BENCH, 0.0) == 1.0

    def test_forcing_value_at_catalyst(self):
        forcing = occupation_points_forcing([1.0], [0.0])
        # g(1) = int_0^1 p(s, 0) ds = sqrt(2/pi)
        assert forcing.at(1.0, 0.0) == pytest.approx(0.7978845608028654, abs=1e-12)

    def test_point_at_catalyst_allowed(self):
        val = laplace_occupation([1.0], [0.0], BENCH, 1.0, n=1024)
        assert 0.0 < val < 1.0

    def test_small_theta_first_moment_limit(self):
        # -log(value)/theta -> E_lambda y_t(z) = t as theta -> 0
        theta = 1e-6
        val = laplace_occupation([theta], [0.0], BENCH, 1.0, n=1024)
        assert -math.log(val) / theta == pytest.approx(1.0, abs=1e-4)
