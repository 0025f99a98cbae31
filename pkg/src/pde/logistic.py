"""
Scalar logistic problem Δu + u f(u) = 0, u = 0 on the boundary.

Two monotone iterations (-Δ_h + M) u_{n+1} = M u_n + u_n f(u_n) run from the constant
super solution c0 and from the sub solution εφ₁; their limits must coincide.
"""

from functools import lru_cache
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import bisect
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

from data.errors import InvalidArgumentError, NumericalFailureError, UniquenessViolationError
from data.functions import GrowthFunction, scan_extrema
from data.models import Grid, GrowthFamily, LogisticSolution, ScalarField, SolutionCheck
from data.settings import SolverSettings, resolve
from pde.grid import attainable_tolerance, helmholtz_operator, residual_norm, stiffness_matrix
from pde.spectral import principal_of_laplacian
from utils.progress import progress

SUB_SOLUTION_MARGIN = 1e-8
MAX_HALVINGS = 60
MONOTONE_DEFECT_TOL = 1e-8
UNIQUENESS_FACTOR = 10.0


class Reaction(BaseModel):
    """f(u) = h(u) - shift"""

    model_config = ConfigDict(frozen=True)

    growth: GrowthFunction
    shift: float = 0.0

    def value(self, u):
        return self.growth.value(u) - self.shift

    def derivative(self, u):
        return self.growth.derivative(u)


class LogisticProblem(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid: Grid
    reaction: Reaction
    c0: float


def reaction_root(reaction: Reaction) -> float:
    """Root of f on the working range, 0 when f(0) <= 0."""
    growth = reaction.growth
    if reaction.value(0.0) <= 0:
        return 0.0
    if growth.family == GrowthFamily.AFFINE:
        return (growth.a - reaction.shift) / growth.b
    return float(bisect(reaction.value, 0.0, growth.working_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def logistic_problem(grid: Grid, growth: GrowthFunction, shift: float = 0.0) -> LogisticProblem:
    reaction = Reaction(growth=growth, shift=float(shift))
    return LogisticProblem(grid=grid, reaction=reaction, c0=reaction_root(reaction))


def iteration_shift(problem: LogisticProblem, settings: SolverSettings | None = None) -> float:
    """M dominating sup |d/du (u f(u))| on [0, c0]."""
    reaction, c0 = problem.reaction, problem.c0
    growth = reaction.growth
    if growth.family == GrowthFamily.AFFINE:
        return abs(growth.a - reaction.shift) + 2.0 * growth.b * c0
    _, upper = scan_extrema(lambda u: np.abs(reaction.value(u) + u * reaction.derivative(u)), 0.0, c0, resolve(settings).scan_samples)
    return max(upper, 0.0)


def logistic_residual(grid: Grid, u: np.ndarray, reaction_values: np.ndarray) -> np.ndarray:
    """Raw Δ_h u + u f"""
    return -(stiffness_matrix(grid) @ u) + u * reaction_values


def linearized_step(grid: Grid, shift_m: float, u: np.ndarray, reaction_values: np.ndarray, settings: SolverSettings | None = None) -> np.ndarray:
    """One step of (-Δ_h + M) w = M u + u f, f given node-wise."""
    operator = helmholtz_operator(grid, float(shift_m), resolve(settings).linear_tol)
    return operator.solve(shift_m * u + u * reaction_values)


def _monotone_branch(problem: LogisticProblem, shift_m: float, start: np.ndarray, decreasing: bool, tol: float, settings: SolverSettings) -> Tuple[np.ndarray, int, float]:
    grid, reaction = problem.grid, problem.reaction
    u = start.copy()
    previous_increment = None
    worst_defect = 0.0
    for iteration in range(1, settings.logistic_max_iter + 1):
        updated = linearized_step(grid, shift_m, u, reaction.value(u), settings)
        step = updated - u
        defect = float(np.max(step if decreasing else -step))
        if defect > MONOTONE_DEFECT_TOL * (1.0 + float(np.max(np.abs(u)))):
            raise NumericalFailureError(f"{'super' if decreasing else 'sub'} iteration lost monotonicity at step {iteration}", residual=defect)
        worst_defect = max(worst_defect, defect, 0.0)
        increment = float(np.max(np.abs(step)))
        u = updated

        if increment == 0.0:
            error_estimate = 0.0
        elif previous_increment:
            rate = increment / previous_increment
            error_estimate = increment * rate / (1.0 - rate) if rate < 1.0 else np.inf
        else:
            error_estimate = np.inf
        previous_increment = increment

        if error_estimate <= tol / 2 and residual_norm(logistic_residual(grid, u, reaction.value(u))) <= attainable_tolerance(grid, tol, u):
            return u, iteration, worst_defect
    residual = residual_norm(logistic_residual(grid, u, reaction.value(u)))
    raise NumericalFailureError("monotone iteration hit its iteration limit", residual=residual)


def newton_polish(grid: Grid, reaction: Reaction, theta: np.ndarray, tol: float) -> Tuple[np.ndarray, bool]:
    """One Newton correction; kept only when it moves theta by at most tol."""
    f, df = reaction.value(theta), reaction.derivative(theta)
    jacobian = (stiffness_matrix(grid) - diags(f + theta * df)).tocsc()
    delta = spsolve(jacobian, logistic_residual(grid, theta, f))
    if np.all(np.isfinite(delta)) and float(np.max(np.abs(delta))) <= tol:
        return theta + delta, True
    return theta, False


def _zero_solution(problem: LogisticProblem) -> LogisticSolution:
    return LogisticSolution(theta=ScalarField.zeros(problem.grid), iterations=0, residual=0.0, positive=False, c0=problem.c0)


def solve_logistic(problem: LogisticProblem, tol_res: float | None = None, settings: SolverSettings | None = None) -> LogisticSolution:
    settings = resolve(settings)
    tol = tol_res if tol_res is not None else settings.logistic_tol
    grid, reaction = problem.grid, problem.reaction
    eigen = principal_of_laplacian(grid, settings)
    lam = eigen.eigenvalue

    if problem.c0 <= 0 or reaction.value(0.0) <= lam:
        return _zero_solution(problem)

    epsilon = problem.c0 / 2
    for _ in range(MAX_HALVINGS):
        if reaction.value(epsilon) > lam + SUB_SOLUTION_MARGIN:
            break
        epsilon /= 2
    else:
        progress.warn("logistic", None, f"no sub solution below f(0)={reaction.value(0.0):.6g}, λ₁={lam:.6g}")
        return _zero_solution(problem)

    shift_m = iteration_shift(problem, settings)
    upper, super_iterations, super_defect = _monotone_branch(problem, shift_m, np.full(grid.size, problem.c0), True, tol, settings)
    lower, sub_iterations, sub_defect = _monotone_branch(problem, shift_m, epsilon * eigen.phi.values, False, tol, settings)

    branch_gap = float(np.max(np.abs(upper - lower)))
    if branch_gap > UNIQUENESS_FACTOR * tol:
        raise UniquenessViolationError("super and sub monotone limits disagree", gap=branch_gap)

    theta, polished = upper, False
    if settings.logistic_newton_polish:
        theta, polished = newton_polish(grid, reaction, upper, tol)

    residual = residual_norm(logistic_residual(grid, theta, reaction.value(theta)))
    return LogisticSolution(
        theta=ScalarField(grid=grid, values=theta),
        iterations=super_iterations + sub_iterations,
        residual=residual,
        tolerance=attainable_tolerance(grid, tol, theta),
        positive=True,
        c0=problem.c0,
        shift_m=shift_m,
        super_iterations=super_iterations,
        sub_iterations=sub_iterations,
        branch_gap=branch_gap,
        gap=float(np.max(np.abs(theta - lower))),
        monotonicity_defect=max(super_defect, sub_defect),
        polished=polished,
    )


def solve_omega(grid: Grid, a: float, tol_res: float | None = None, settings: SolverSettings | None = None) -> LogisticSolution:
    """ω_a, the solution for f(u) = a - u"""
    if a <= 0:
        return LogisticSolution(theta=ScalarField.zeros(grid), iterations=0, residual=0.0, positive=False)
    growth = GrowthFunction(family=GrowthFamily.AFFINE, a=float(a), b=1.0, working_max=2.0 * a)
    return solve_logistic(logistic_problem(grid, growth), tol_res, settings)


@lru_cache(maxsize=256)
def _cached_theta(grid: Grid, growth: GrowthFunction, shift: float, settings: SolverSettings) -> LogisticSolution:
    return solve_logistic(logistic_problem(grid, growth, shift), settings=settings)


def theta(grid: Grid, growth: GrowthFunction, shift: float = 0.0, settings: SolverSettings | None = None) -> LogisticSolution:
    """θ_{h - shift}, memoized per (grid, h, shift, settings)."""
    return _cached_theta(grid, growth, float(shift) + 0.0, resolve(settings))


def _check(kind: str, grid: Grid, u: ScalarField, reaction: Reaction, tol: float | None, settings: SolverSettings | None) -> SolutionCheck:
    if u.grid != grid:
        raise InvalidArgumentError("field does not belong to this grid")
    if np.any(u.values < 0):
        raise InvalidArgumentError("super/sub solution candidates must be non-negative")
    tol = tol if tol is not None else resolve(settings).tol_res
    values = logistic_residual(grid, u.values, reaction.value(u.values))
    tol = attainable_tolerance(grid, tol, u.values)
    worst = int(np.argmax(values)) if kind == "super" else int(np.argmin(values))
    value = float(values[worst])
    passed = value <= tol if kind == "super" else value >= -tol
    return SolutionCheck(kind=kind, passed=bool(passed), tolerance=tol, worst_node=worst, worst_value=value, location=[float(c) for c in grid.node_coordinates()[worst]])


def check_super_solution(grid: Grid, u: ScalarField, reaction: Reaction, tol: float | None = None, settings: SolverSettings | None = None) -> SolutionCheck:
    """Passes iff Δ_h u + u f(u) <= tol everywhere, up to the roundoff floor."""
    return _check("super", grid, u, reaction, tol, settings)


def check_sub_solution(grid: Grid, u: ScalarField, reaction: Reaction, tol: float | None = None, settings: SolverSettings | None = None) -> SolutionCheck:
    """Passes iff Δ_h u + u f(u) >= -tol everywhere, up to the roundoff floor."""
    return _check("sub", grid, u, reaction, tol, settings)
