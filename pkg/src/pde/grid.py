"""
Uniform grids and the zero-Dirichlet finite-difference Laplacian.

Node index is iy * nx + ix (x fastest), matching the field CSV row order.
"""

import threading
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.sparse import csc_matrix, diags, identity, kron
from scipy.sparse.linalg import LinearOperator, cg, splu

from data.errors import InvalidArgumentError, NumericalFailureError
from data.models import Grid, GridKind, ScalarField
from data.settings import SolverSettings, resolve

ROUNDOFF_FACTOR = 16.0


def build_grid(kind: GridKind | str, lengths: Sequence[float], interior_counts: Sequence[int]) -> Grid:
    return Grid(kind=GridKind(kind), lengths=tuple(float(length) for length in lengths), interior_counts=tuple(int(count) for count in interior_counts))


def _second_difference(count: int, h: float) -> csc_matrix:
    return diags([-np.ones(count - 1), 2.0 * np.ones(count), -np.ones(count - 1)], [-1, 0, 1], format="csc") / h**2


@lru_cache(maxsize=64)
def stiffness_matrix(grid: Grid) -> csc_matrix:
    """-Δ_h as a sparse SPD matrix."""
    if grid.kind == GridKind.INTERVAL:
        return _second_difference(grid.interior_counts[0], grid.spacing[0])
    (nx, ny), (hx, hy) = grid.interior_counts, grid.spacing
    return (kron(identity(ny), _second_difference(nx, hx)) + kron(_second_difference(ny, hy), identity(nx))).tocsc()


def _check_field(grid: Grid, field: ScalarField):
    if field.grid != grid:
        raise InvalidArgumentError("field does not belong to this grid")


def apply_laplacian(grid: Grid, field: ScalarField) -> ScalarField:
    _check_field(grid, field)
    return ScalarField(grid=grid, values=-(stiffness_matrix(grid) @ field.values))


def residual_norm(residual: np.ndarray) -> float:
    return float(np.max(np.abs(residual))) if np.size(residual) else 0.0


def roundoff_floor(grid: Grid, values: np.ndarray) -> float:
    """Smallest sup residual Δ_h u can be evaluated to in floating point; values are (M,) or (N, M)."""
    magnitudes = np.abs(np.asarray(values, dtype=float)).reshape(-1, grid.size)
    return ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.max(abs(stiffness_matrix(grid)) @ magnitudes.T))


def attainable_tolerance(grid: Grid, tol: float, values: np.ndarray) -> float:
    """tol, raised to the roundoff floor only where the floor binds."""
    return max(tol, roundoff_floor(grid, values))


class HelmholtzOperator:
    """(-Δ_h + shift) with a cached sparse LU; falls back to preconditioned CG."""

    def __init__(self, grid: Grid, shift: float, linear_tol: float):
        self.grid = grid
        self.shift = shift
        self.linear_tol = linear_tol
        self.matrix = (stiffness_matrix(grid) + shift * identity(grid.size, format="csc")).tocsc()
        self._abs_matrix = abs(self.matrix)
        self._lu = splu(self.matrix)
        self._lock = threading.Lock()

    def _acceptable(self, rhs: np.ndarray, x: np.ndarray) -> tuple[float, float]:
        residual = float(np.linalg.norm(rhs - self.matrix @ x))
        floor = ROUNDOFF_FACTOR * np.finfo(float).eps * float(np.linalg.norm(self._abs_matrix @ np.abs(x)))
        return residual, max(self.linear_tol * float(np.linalg.norm(rhs)), floor)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        with self._lock:
            x = self._lu.solve(rhs)
        residual, allowed = self._acceptable(rhs, x)
        if residual <= allowed:
            return x
        preconditioner = LinearOperator(self.matrix.shape, matvec=self._lu.solve)
        floor = allowed if allowed > self.linear_tol * float(np.linalg.norm(rhs)) else 0.0
        x, info = cg(self.matrix, rhs, x0=x, rtol=self.linear_tol, atol=floor, M=preconditioner, maxiter=10 * self.grid.size)
        residual, allowed = self._acceptable(rhs, x)
        if info != 0 or residual > allowed:
            raise NumericalFailureError(f"Helmholtz solve (shift={self.shift:g}) did not converge", residual=residual)
        return x


@lru_cache(maxsize=128)
def helmholtz_operator(grid: Grid, shift: float, linear_tol: float = 1e-12) -> HelmholtzOperator:
    return HelmholtzOperator(grid, float(shift), linear_tol)


def solve_helmholtz(grid: Grid, shift: float, rhs: ScalarField, settings: SolverSettings | None = None) -> ScalarField:
    """w with (-Δ_h + shift) w = rhs"""
    if not np.isfinite(shift) or shift < 0:
        raise InvalidArgumentError(f"shift must be >= 0, got {shift}")
    _check_field(grid, rhs)
    operator = helmholtz_operator(grid, float(shift), resolve(settings).linear_tol)
    return ScalarField(grid=grid, values=operator.solve(rhs.values))
