"""Contract details not covered by the per-module tests: the matrix value
type, the shifted-operator solve path, weighted discrete norms, degenerate
fit tie-breaks, and the CLI selftest."""

import numpy as np
import pytest

from regulab.cli import main
from regulab.errors import InputError
from regulab.fitting import pointwise_fit
from regulab.geometry import make_domain
from regulab.grid import GridFunction, build_grid
from regulab.manufactured import make_field
from regulab.operators import SymMatrix, catalog_operator, shifted_operator
from regulab.solver import solve
from regulab.stencil import discretize


class TestSymMatrix:
    def test_symmetrizes(self):
        M = SymMatrix([[1.0, 2.0], [0.0, 3.0]])
        assert M.entries[0, 1] == M.entries[1, 0] == 1.0

    def test_eigenvalues_closed_form(self):
        M = SymMatrix([[2.0, 1.0], [1.0, 2.0]])
        assert M.eigenvalues() == pytest.approx((1.0, 3.0))
        assert M.trace() == 4.0
        assert M.spectral_norm() == 3.0

    def test_immutable(self):
        M = SymMatrix.diag(1.0, 2.0)
        with pytest.raises(AttributeError):
            M.entries = np.eye(2)
        with pytest.raises(ValueError):
            M.entries[0, 0] = 5.0

    def test_algebra_and_operator_input(self):
        A = SymMatrix.diag(1.0, -1.0)
        B = SymMatrix([[0.0, 1.0], [1.0, 0.0]])
        C = 2.0 * A + B - A
        op = catalog_operator("pucci+", 1, 2)
        assert op(C) == op(C.entries)

    def test_rejects_bad_input(self):
        with pytest.raises(InputError):
            SymMatrix(np.zeros(3))
        with pytest.raises(InputError):
            SymMatrix([[np.inf, 0.0], [0.0, 1.0]])


def test_nested_shifted_operator():
    base = catalog_operator("isaacs", 1, 2)
    B1 = np.array([[0.2, 0.1], [0.1, -0.3]])
    op1 = shifted_operator(base, B1, 0.5)
    B2 = np.diag([0.4, -0.1])
    op2 = shifted_operator(op1, B2, 0.25)
    M = np.array([[1.0, -0.5], [-0.5, 0.2]])
    expected = (op1(0.25 * M + B2) - op1(B2)) / 0.25
    assert op2(M) == pytest.approx(expected, abs=1e-12)
    # the doubly zoomed operator still discretizes and solves
    grid = build_grid(make_domain("half_ball"), 1 / 16, 1.0)
    system = discretize(op2, grid, 16)
    aff = make_field("affine", (0.1, 0.2, -0.3))
    u = solve(system, 0.0, aff, tol=1e-10)
    assert np.abs(u.values - aff(grid.node_xy)).max() <= 1e-9


class TestShiftedSolve:
    def test_manufactured_quadratic(self):
        # solving with a zoomed operator reproduces the zoomed equation:
        # F_shift(D^2 q) is constant for a quadratic q
        grid = build_grid(make_domain("half_ball"), 1 / 32, 1.0)
        base = catalog_operator("pucci+", 1, 2)
        B = np.diag([1.0, 1.0])
        op = shifted_operator(base, B, 0.5)
        q = make_field("quadratic", (0.5, 1.0, -0.25))
        H = q.hessian(np.zeros((1, 2)))[0]
        f_const = op(H)
        system = discretize(op, grid, 16)
        u = solve(system, f_const, q, tol=1e-10)
        assert np.abs(u.values - q(grid.node_xy)).max() <= 1e-8


def test_discrete_l2_area_weights():
    grid = build_grid(make_domain("half_ball"), 1 / 64, 1.0)
    one = GridFunction.from_function(grid, lambda p: np.ones(p.shape[0]))
    for r in (0.25, 0.5):
        val = one.discrete_l2(r)
        exact = np.sqrt(np.pi * r * r / 2.0)
        assert val == pytest.approx(exact, rel=0.05)


def test_tie_break_prefers_small_coefficients():
    # samples on the x1-axis leave the x2 slope unconstrained: among all
    # K-minimizers the fit picks the smallest coefficients
    samples = [((x, 0.0), 2.0 * x) for x in np.linspace(-1, 1, 9)]
    fit = pointwise_fit(samples, (0.0, 0.0), 1, 0.5)
    assert fit.P0.c1[0] == pytest.approx(2.0, abs=1e-8)
    assert abs(fit.P0.c1[1]) <= 1e-8
    assert fit.K <= 1e-9


def test_viscosity_membership_of_solved_problem():
    from regulab.campanato import viscosity_membership

    grid = build_grid(make_domain("half_ball"), 1 / 64, 1.0)
    op = catalog_operator("pucci+", 1, 2)
    system = discretize(op, grid, 16)
    u = solve(system, 1.0, make_field("arc_modes", [0.7, 0.2]), tol=1e-10)
    rep = viscosity_membership(u, 1.0, 1.0, 2.0, tol=1e-6)
    assert rep["sub"] and rep["super"]


def test_cli_selftest_passes():
    assert main(["selftest"]) == 0


def test_example_config_runs(tmp_path):
    rc = main(["rates", "--config", "examples_configs/flat_c1a.json",
               "--out", str(tmp_path / "out")])
    assert rc == 0
    assert (tmp_path / "out" / "summary.json").exists()
