import numpy as np
import pytest

from data.errors import InvalidArgumentError
from data.models import GridKind, ScalarField
from pde.grid import apply_laplacian, build_grid, helmholtz_operator, residual_norm, roundoff_floor, solve_helmholtz, stiffness_matrix


def test_grid_spacing_and_coordinates():
    grid = build_grid("interval", [2.0], [9])
    assert grid.kind == GridKind.INTERVAL
    assert grid.spacing == (0.2,)
    assert grid.size == 9
    np.testing.assert_allclose(grid.node_coordinates()[:, 0], np.arange(1, 10) * 0.2)


def test_rectangle_coordinates_run_x_fastest():
    grid = build_grid("rectangle", [1.0, 2.0], [3, 4])
    coords = grid.node_coordinates()
    assert coords.shape == (12, 2)
    np.testing.assert_allclose(coords[:3, 0], [0.25, 0.5, 0.75])
    np.testing.assert_allclose(coords[:3, 1], [0.4, 0.4, 0.4])
    np.testing.assert_allclose(coords[3, 1], 0.8)


@pytest.mark.parametrize(
    "kind,lengths,counts",
    [
        ("interval", [1.0], [2]),
        ("interval", [0.0], [10]),
        ("interval", [1.0, 1.0], [10, 10]),
        ("rectangle", [1.0], [10]),
    ],
)
def test_invalid_grids_rejected(kind, lengths, counts):
    with pytest.raises(InvalidArgumentError):
        build_grid(kind, lengths, counts)


def test_stiffness_is_symmetric_positive_definite():
    grid = build_grid("rectangle", [1.0, 1.0], [6, 5])
    dense = stiffness_matrix(grid).toarray()
    np.testing.assert_allclose(dense, dense.T)
    assert np.linalg.eigvalsh(dense).min() > 0


def test_laplacian_exact_on_quadratic_1d(interval_50):
    x = interval_50.node_coordinates()[:, 0]
    result = apply_laplacian(interval_50, ScalarField(grid=interval_50, values=x * (1 - x)))
    np.testing.assert_allclose(result.values, -2.0, atol=1e-8)


def test_laplacian_exact_on_product_quadratic_2d():
    grid = build_grid("rectangle", [1.0, 1.0], [12, 9])
    coords = grid.node_coordinates()
    x, y = coords[:, 0], coords[:, 1]
    result = apply_laplacian(grid, ScalarField(grid=grid, values=x * (1 - x) * y * (1 - y)))
    np.testing.assert_allclose(result.values, -2 * y * (1 - y) - 2 * x * (1 - x), atol=1e-9)


def test_solve_helmholtz_recovers_field(interval_50):
    rng = np.random.default_rng(3)
    u = rng.uniform(0, 1, interval_50.size)
    shift = 2.5
    rhs = stiffness_matrix(interval_50) @ u + shift * u
    solution = solve_helmholtz(interval_50, shift, ScalarField(grid=interval_50, values=rhs))
    np.testing.assert_allclose(solution.values, u, atol=1e-10)


def test_solve_helmholtz_rejects_negative_shift(interval_50):
    with pytest.raises(InvalidArgumentError):
        solve_helmholtz(interval_50, -1.0, ScalarField.zeros(interval_50))


def test_solve_helmholtz_rejects_foreign_field(interval_50, interval_200):
    with pytest.raises(InvalidArgumentError):
        solve_helmholtz(interval_50, 0.0, ScalarField.zeros(interval_200))


def test_helmholtz_operator_is_cached(interval_50):
    assert helmholtz_operator(interval_50, 3.0) is helmholtz_operator(interval_50, 3.0)


def test_residual_norm_is_unscaled(interval_50):
    raw = np.zeros(interval_50.size)
    raw[7] = -5.0
    assert residual_norm(raw) == 5.0
    assert residual_norm(np.zeros((2, 0))) == 0.0


def test_roundoff_floor_takes_the_worst_species(interval_50):
    h = interval_50.spacing[0]
    stacked = np.ones((2, interval_50.size))
    stacked[1] *= 3.0
    assert roundoff_floor(interval_50, stacked) == pytest.approx(16.0 * np.finfo(float).eps * 3.0 * 4.0 / h**2)


def test_field_validation(interval_50):
    with pytest.raises(InvalidArgumentError):
        ScalarField(grid=interval_50, values=np.zeros(10))
    values = np.zeros(interval_50.size)
    values[0] = np.nan
    with pytest.raises(InvalidArgumentError):
        ScalarField(grid=interval_50, values=values)
