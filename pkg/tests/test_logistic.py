import numpy as np
import pytest

from data.functions import GrowthFunction
from data.models import GrowthFamily, ScalarField
from pde.grid import build_grid, roundoff_floor
from pde.logistic import Reaction, check_sub_solution, check_super_solution, iteration_shift, logistic_problem, logistic_residual, solve_logistic, solve_omega, theta
from pde.spectral import principal_of_laplacian


def affine(a, b=1.0):
    return GrowthFunction(family=GrowthFamily.AFFINE, a=a, b=b, working_max=2.0 * a / b)


def test_threshold_below_lambda1_gives_zero(interval_200):
    solution = solve_omega(interval_200, np.pi**2 - 0.1)
    assert not solution.positive
    assert solution.theta.sup_norm() < 1e-6


def test_threshold_above_lambda1_gives_positive(interval_200):
    solution = solve_omega(interval_200, np.pi**2 + 0.1)
    assert solution.positive
    assert np.all(solution.theta.values > 0)
    assert solution.residual <= solution.tolerance


def test_non_positive_growth_gives_zero(interval_50):
    assert not solve_omega(interval_50, -1.0).positive
    assert not theta(interval_50, affine(12.0), shift=20.0).positive


def test_solution_is_increasing_in_the_reaction(interval_200):
    low = solve_omega(interval_200, 12.0).theta.values
    high = solve_omega(interval_200, 15.0).theta.values
    assert np.all(low <= high + 1e-8)


def test_super_and_sub_iterations_meet(interval_200):
    solution = solve_omega(interval_200, 12.0)
    assert solution.branch_gap <= 1e-8
    assert solution.monotonicity_defect <= 1e-8
    assert solution.super_iterations > 0 and solution.sub_iterations > 0
    assert 0 < solution.theta.sup_norm() < solution.c0 == 12.0


def test_iteration_shift_affine(interval_50):
    problem = logistic_problem(interval_50, affine(12.0))
    assert problem.c0 == 12.0
    assert iteration_shift(problem) == pytest.approx(12.0 + 2.0 * 12.0)


def test_saturating_growth_solves(interval_50):
    growth = GrowthFunction(family=GrowthFamily.SATURATING, a=12.0, b=24.0, s=4.0, working_max=8.0)
    solution = theta(interval_50, growth)
    assert solution.positive
    assert solution.theta.sup_norm() < 4.0 * np.arctanh(0.5)
    assert solution.residual <= 1e-9


def test_shift_lowers_the_solution(interval_50):
    growth = affine(12.0)
    assert np.all(theta(interval_50, growth, 1.0).theta.values <= theta(interval_50, growth).theta.values + 1e-8)


def test_theta_is_memoized(interval_50):
    assert theta(interval_50, affine(13.0)) is theta(interval_50, affine(13.0))


def test_super_and_sub_solution_checks(interval_50):
    growth = affine(12.0)
    reaction = Reaction(growth=growth)
    constant = ScalarField(grid=interval_50, values=np.full(interval_50.size, 12.0))
    assert check_super_solution(interval_50, constant, reaction).passed

    phi = principal_of_laplacian(interval_50).phi.values
    assert check_sub_solution(interval_50, ScalarField(grid=interval_50, values=0.5 * phi), reaction).passed

    half = ScalarField(grid=interval_50, values=0.5 * theta(interval_50, growth).theta.values)
    assert check_sub_solution(interval_50, half, reaction).passed
    check = check_super_solution(interval_50, half, reaction)
    assert not check.passed
    assert check.worst_value > 0
    assert len(check.location) == 1


@pytest.mark.slow
def test_agrees_with_fine_grid_reference():
    coarse_grid = build_grid("interval", [1.0], [200])
    fine_grid = build_grid("interval", [1.0], [1607])
    coarse = solve_omega(coarse_grid, 12.0).theta.values
    fine = solve_omega(fine_grid, 12.0).theta.values
    shared = fine[8 * (np.arange(200) + 1) - 1]
    assert float(np.max(np.abs(coarse - shared))) <= 5e-4


def test_residual_is_the_raw_sup_norm(interval_200):
    solution = solve_omega(interval_200, 12.0)
    u = solution.theta.values
    raw = logistic_residual(interval_200, u, 12.0 - u)
    assert solution.residual == pytest.approx(float(np.max(np.abs(raw))), rel=1e-12, abs=1e-300)
    assert solution.tolerance == pytest.approx(max(1e-9, roundoff_floor(interval_200, u)))
    assert solution.residual <= solution.tolerance < 1e-8


def test_roundoff_floor_only_binds_on_fine_grids(interval_50):
    assert roundoff_floor(interval_50, np.full(interval_50.size, 12.0)) < 1e-9
    fine = build_grid("interval", [1.0], [20000])
    assert roundoff_floor(fine, np.full(fine.size, 12.0)) > 1e-8
