import numpy as np
import pytest

from regulab.campanato import (
    IterationConfig,
    campanato_c1a,
    campanato_c2a,
    modulus_probe,
    rate_fit,
    viscosity_membership,
)
from regulab.errors import InputError, InsufficientScalesError
from regulab.geometry import make_domain
from regulab.grid import GridFunction, build_grid
from regulab.manufactured import make_field, rhs_for
from regulab.operators import catalog_operator, solve_recession_constant
from regulab.solver import solve
from regulab.stencil import discretize


@pytest.fixture(scope="module")
def grid():
    return build_grid(make_domain("half_ball"), 1 / 128, 1.0)


@pytest.fixture(scope="module")
def cfg():
    return IterationConfig(eta=0.5, alpha=0.5, r_start=0.25)


class TestC1a:
    def test_exact_linear(self, grid, cfg):
        u = GridFunction.from_function(grid, lambda p: p[:, 1])
        trace, Du0 = campanato_c1a(u, None, cfg)
        assert all(abs(P.c1[1] - 1.0) <= 1e-12 for P in trace.coeffs)
        assert max(trace.residuals) <= 1e-12
        assert Du0[0] == 0.0 and Du0[1] == pytest.approx(1.0, abs=1e-12)

    def test_holder_profile_slope(self, grid, cfg):
        # u = x2 + x2^1.6: the linear coefficient converges to 1 and the
        # residual at scale r is at most r^1.6, so the slope is >= 1.5
        u = GridFunction.from_function(grid, lambda p: p[:, 1] + p[:, 1] ** 1.6)
        trace, Du0 = campanato_c1a(u, None, cfg)
        for r, res in zip(trace.scales, trace.residuals):
            assert res <= r ** 1.6 + 1e-12
        rep = rate_fit(trace.scales, trace.residuals)
        assert rep.slope >= 1.5
        # the coefficient approaches 1 at the Holder rate r^0.6
        assert abs(Du0[1] - 1.0) <= trace.scales[-1] ** 0.6

    def test_rescaling_identity(self, grid, cfg):
        u = GridFunction.from_function(
            grid, lambda p: p[:, 1] + 0.6 * p[:, 0] * p[:, 1] + 0.1 * p[:, 1] ** 2
        )
        trace, _ = campanato_c1a(u, None, cfg)
        assert max(trace.rescale_gaps) <= 1e-9

    def test_insufficient_scales(self, cfg):
        coarse = build_grid(make_domain("half_ball"), 1 / 16, 1.0)
        u = GridFunction.from_function(coarse, lambda p: p[:, 1])
        with pytest.raises(InsufficientScalesError):
            campanato_c1a(u, None, IterationConfig(eta=0.5, alpha=0.5, r_start=0.25))

    def test_coefficient_scaling(self, grid, cfg):
        u1 = GridFunction.from_function(grid, lambda p: p[:, 1] + p[:, 1] ** 2)
        u3 = GridFunction.from_function(grid, lambda p: 3 * (p[:, 1] + p[:, 1] ** 2))
        t1, _ = campanato_c1a(u1, None, cfg)
        t3, _ = campanato_c1a(u3, None, cfg)
        for P1, P3 in zip(t1.coeffs, t3.coeffs):
            assert P3.c1[1] == pytest.approx(3 * P1.c1[1], abs=1e-9)


class TestC2a:
    def test_exact_mixed_quadratic(self, grid):
        # u = x1*x2 solves the trace equation with b1n = 1, b2n = 0
        op = catalog_operator("laplace")
        u = GridFunction.from_function(grid, lambda p: p[:, 0] * p[:, 1])
        cfg2 = IterationConfig(eta=0.5, alpha=0.25, r_start=0.25)
        trace, D2m = campanato_c2a(u, None, op, cfg2)
        for P in trace.coeffs:
            assert 2 * P.c2[0, 1] == pytest.approx(1.0, abs=1e-10)
            assert P.c2[1, 1] == pytest.approx(0.0, abs=1e-12)
        assert max(trace.residuals) <= 1e-10
        assert max(trace.constraint_residuals) <= 1e-10
        # Hessian entries (u_12, u_22) of the fitted profile
        assert D2m[0] == pytest.approx(1.0, abs=1e-9)
        assert D2m[1] == pytest.approx(0.0, abs=1e-12)

    def test_precondition_diagnostic(self, grid):
        op = catalog_operator("laplace")
        u = GridFunction.from_function(grid, lambda p: p[:, 1])
        cfg2 = IterationConfig(eta=0.5, alpha=0.25, r_start=0.25)
        trace, _ = campanato_c2a(u, None, op, cfg2)
        assert trace.flags.get("precondition_suspect")

    def test_constraint_maintained_under_isaacs(self, grid):
        op = catalog_operator("isaacs", 1, 2)
        t = solve_recession_constant(op, np.array([[0.0, 3.0], [3.0, 0.0]]), tol=1e-13)
        field = make_field("c2a_jet", (3.0, 0.5 * t, 0.05))
        system = discretize(op, grid, 16)
        u = solve(system, rhs_for(field, op), field, tol=1e-10)
        cfg2 = IterationConfig(eta=0.5, alpha=0.25, r_start=0.25)
        trace, _ = campanato_c2a(u, None, op, cfg2)
        assert max(trace.constraint_residuals) <= 1e-8
        assert 2 * trace.coeffs[-1].c2[0, 1] == pytest.approx(3.0, abs=1e-2)

    def test_coefficient_scaling(self, grid):
        op = catalog_operator("pucci+", 1, 2)
        base = lambda p: 2.0 * p[:, 0] * p[:, 1]
        u1 = GridFunction.from_function(grid, base)
        u3 = GridFunction.from_function(grid, lambda p: 3.0 * base(p))
        cfg2 = IterationConfig(eta=0.5, alpha=0.25, r_start=0.25)
        t1, _ = campanato_c2a(u1, None, op, cfg2)
        t3, _ = campanato_c2a(u3, None, op, cfg2)
        for P1, P3 in zip(t1.coeffs, t3.coeffs):
            assert 2 * P3.c2[0, 1] == pytest.approx(3 * 2 * P1.c2[0, 1], abs=2e-8)


class TestRateFit:
    def test_exact_square_law(self):
        r = np.array([0.5, 0.25, 0.125, 0.0625])
        rep = rate_fit(r, r ** 2)
        assert rep.slope == pytest.approx(2.0, abs=1e-9)
        assert rep.fitted_C == pytest.approx(1.0, abs=1e-9)
        assert rep.r2 == pytest.approx(1.0, abs=1e-12)

    def test_exact_power_with_constant(self):
        r = np.array([0.5, 0.25, 0.125, 0.0625, 0.03125])
        rep = rate_fit(r, 3.0 * r ** 1.5)
        assert rep.slope == pytest.approx(1.5, abs=1e-9)
        assert rep.fitted_C == pytest.approx(3.0, abs=1e-9)
        assert rep.r1 == pytest.approx(0.5, abs=1e-12)

    def test_perturbed_power(self):
        r = np.geomspace(0.5, 0.01, 12)
        res = 3.0 * r ** 1.5 * (1.0 + 0.1 * np.sin(7 * np.log(r)))
        rep = rate_fit(r, res)
        assert abs(rep.slope - 1.5) <= 0.05

    def test_exact_sentinel(self):
        rep = rate_fit([0.5, 0.25, 0.125], [0.0, 0.0, 0.0])
        assert rep.exact
        assert rep.slope == np.inf

    def test_too_few_points(self):
        with pytest.raises(InputError):
            rate_fit([0.5, 0.25, 0.125], [0.1, 0.01, 0.0])


class TestModulusProbe:
    def test_constant(self, grid):
        u = GridFunction.from_function(grid, lambda p: np.full(p.shape[0], 2.0))
        assert modulus_probe(u, ((0.0, 0.5), 0.3), 3 / 128) == 0.0

    def test_linear_profile(self, grid):
        u = GridFunction.from_function(grid, lambda p: p[:, 1])
        s = 2.5 / 128
        m = modulus_probe(u, ((0.0, 0.5), 0.3), s)
        assert m <= s + 1e-12
        assert m >= s - 2 * grid.h

    def test_monotone_in_separation(self, grid):
        u = GridFunction.from_function(grid, lambda p: np.sin(3 * p[:, 0]) * p[:, 1])
        m1 = modulus_probe(u, ((0.0, 0.5), 0.3), 2 / 128)
        m2 = modulus_probe(u, ((0.0, 0.5), 0.3), 4 / 128)
        assert m1 <= m2 + 1e-15

    def test_no_pairs(self, grid):
        u = GridFunction.from_function(grid, lambda p: p[:, 1])
        with pytest.raises(InputError):
            modulus_probe(u, ((0.0, 0.5), 0.001), 1e-6)


class TestViscosityMembership:
    def test_linear_in_class(self, grid):
        u = GridFunction.from_function(grid, lambda p: p[:, 1], n_dirs=16)
        rep = viscosity_membership(u, 0.0, 1.0, 2.0, tol=1e-8)
        assert rep["sub"] and rep["super"]

    def test_convex_paraboloid(self, grid):
        u = GridFunction.from_function(
            grid, lambda p: p[:, 0] ** 2 + p[:, 1] ** 2, n_dirs=16
        )
        rep = viscosity_membership(u, 0.0, 1.0, 2.0, tol=1e-7)
        assert rep["sub"]          # maximal operator = 4*Lam >= 0
        assert not rep["super"]    # minimal operator = 4*lam > 0

    def test_solved_problem_in_class(self, grid):
        op = catalog_operator("pucci+", 1, 2)
        system = discretize(op, grid, 16)
        u = solve(system, 1.0, make_field("arc_modes", [0.5]), tol=1e-10)
        rep = viscosity_membership(u, 1.0, 1.0, 2.0, tol=1e-6)
        assert rep["sub"]

    def test_grid_mismatch(self, grid):
        other = build_grid(make_domain("half_ball"), 1 / 32, 1.0)
        u = GridFunction.from_function(grid, lambda p: p[:, 1], n_dirs=16)
        f = GridFunction.from_function(other, lambda p: p[:, 1])
        with pytest.raises(InputError):
            viscosity_membership(u, f, 1.0, 2.0)


def test_iteration_config_validation():
    with pytest.raises(InputError):
        IterationConfig(eta=1.5)
    with pytest.raises(InputError):
        IterationConfig(alpha=0.0)
    cfg = IterationConfig(eta=0.5, alpha=0.5, r_start=1.0, r_floor=0.1)
    scales = cfg.scales(grid_h=0.01)
    assert scales[0] == 1.0
    assert scales[-1] >= 0.1
