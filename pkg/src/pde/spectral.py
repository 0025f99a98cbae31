"""
Principal eigenpair of -Δ_h + diag(q) by shifted inverse power iteration.
"""

from functools import lru_cache

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from data.errors import InvalidArgumentError, NumericalFailureError
from data.models import EigenPair, Grid, ScalarField
from data.settings import SolverSettings, resolve
from pde.grid import ROUNDOFF_FACTOR, stiffness_matrix

STAGNATION_WINDOW = 5


def principal_eigenpair(grid: Grid, q: ScalarField, settings: SolverSettings | None = None) -> EigenPair:
    """Smallest eigenvalue of -Δ_h + diag(q) and its eigenfunction, normalized to max 1."""
    settings = resolve(settings)
    if q.grid != grid:
        raise InvalidArgumentError("potential does not belong to this grid")
    potential = q.values
    operator = (stiffness_matrix(grid) + diags(potential)).tocsc()
    # below the Gershgorin bound of the stiffness part: the shifted matrix is SPD
    sigma = float(potential.min()) - 1.0
    lu = splu((operator - sigma * diags(np.ones(grid.size))).tocsc())
    abs_operator = abs(operator)
    target = settings.eigen_tol * (float(np.max(np.abs(potential))) + 1.0)

    x = np.ones(grid.size)
    best, stalled = np.inf, 0
    for iteration in range(1, settings.eigen_max_iter + 1):
        y = lu.solve(x)
        x = y / np.max(np.abs(y))
        ax = operator @ x
        eigenvalue = float(x @ ax) / float(x @ x)
        residual = float(np.max(np.abs(ax - eigenvalue * x)))
        floor = ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.max(abs_operator @ np.abs(x)))
        if residual <= max(target + settings.eigen_tol * abs(eigenvalue), floor):
            break
        if residual < best:
            best, stalled = residual, 0
        else:
            stalled += 1
            if stalled >= STAGNATION_WINDOW:
                raise NumericalFailureError("inverse power iteration stagnated", residual=residual)
    else:
        raise NumericalFailureError("inverse power iteration hit its iteration limit", residual=residual)

    phi = x if x.sum() > 0 else -x
    if np.any(phi <= 0):
        raise NumericalFailureError("principal eigenfunction is not positive", residual=residual)
    return EigenPair(eigenvalue=eigenvalue, phi=ScalarField(grid=grid, values=phi), residual=residual, iterations=iteration)


@lru_cache(maxsize=64)
def _principal_of_laplacian(grid: Grid, settings: SolverSettings) -> EigenPair:
    return principal_eigenpair(grid, ScalarField.zeros(grid), settings)


def principal_of_laplacian(grid: Grid, settings: SolverSettings | None = None) -> EigenPair:
    return _principal_of_laplacian(grid, resolve(settings))


def lambda1(grid: Grid, settings: SolverSettings | None = None) -> float:
    """λ₁ of -Δ_h with zero Dirichlet data"""
    return principal_of_laplacian(grid, settings).eigenvalue


def lambda1_of(grid: Grid, potential: np.ndarray, settings: SolverSettings | None = None) -> float:
    return principal_eigenpair(grid, ScalarField(grid=grid, values=potential), settings).eigenvalue
