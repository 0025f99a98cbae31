import numpy as np
import pytest

from conftest import two_species
from data.errors import InvalidArgumentError
from data.models import ScalarField, SolveMethod, SystemState
from data.samples import create_sample_spec
from data.settings import get_settings
from pde.logistic import theta
from pde.spectral import lambda1
from utils.progress import ProgressTracker, progress
from pde.system import assemble_frechet, check_invertibility, default_bounds, multi_start_uniqueness, picard_sweep, residual, solve_system, stacked_residual


def test_decoupled_system_returns_logistic_solutions():
    spec, _ = create_sample_spec("decoupled", grid_n=100)
    _, upper = default_bounds(spec)
    start = SystemState.from_stacked(spec.grid, 0.5 * upper.stacked())
    report = solve_system(spec, start)
    assert report.converged
    assert np.all(report.state.stacked() > 0)
    for field, sp in zip(report.state.fields, spec.species):
        np.testing.assert_allclose(field.values, theta(spec.grid, sp.h).theta.values, atol=1e-8)


def test_canonical_solution_respects_bounds(small_canonical):
    lower, upper = default_bounds(small_canonical)
    report = solve_system(small_canonical, upper)
    assert report.converged
    assert report.within_bounds
    assert report.residual <= 1e-8
    assert report.tolerance == 1e-8
    assert np.all(report.state.stacked() > 0)
    assert np.all(lower.stacked() <= upper.stacked() + 1e-12)


@pytest.mark.parametrize("method", [SolveMethod.NEWTON, SolveMethod.PICARD, SolveMethod.HYBRID])
def test_methods_agree(small_canonical, method):
    _, upper = default_bounds(small_canonical)
    reference = solve_system(small_canonical, upper, SolveMethod.NEWTON).state
    report = solve_system(small_canonical, upper, method)
    assert report.converged
    assert report.method == method
    assert report.state.distance(reference) <= 1e-7


def test_residual_vanishes_at_solution(small_canonical):
    _, upper = default_bounds(small_canonical)
    state = solve_system(small_canonical, upper).state
    fields = residual(small_canonical, state)
    assert len(fields) == 2
    assert max(field.sup_norm() for field in fields) <= 1e-8


def test_picard_sweep_keeps_the_solution_fixed(small_canonical):
    _, upper = default_bounds(small_canonical)
    state = solve_system(small_canonical, upper).state
    assert picard_sweep(small_canonical, state).distance(state) < 1e-7


def test_symmetric_species_give_symmetric_state():
    spec, _ = create_sample_spec("symmetric")
    _, upper = default_bounds(spec)
    report = solve_system(spec, upper)
    assert report.converged
    u1, u2 = report.state.stacked()
    assert float(np.max(np.abs(u1 - u2))) <= 1e-8


def test_frechet_matches_finite_differences():
    spec, _ = create_sample_spec("three_species", grid_n=20)
    rng = np.random.default_rng(5)
    step = 1e-6
    for _ in range(3):
        stacked = rng.uniform(0.2, 2.0, (3, spec.grid.size))
        matrix = assemble_frechet(spec, SystemState.from_stacked(spec.grid, stacked)).matrix().toarray()
        flat = stacked.ravel()
        numeric = np.empty_like(matrix)
        for column in range(flat.size):
            plus, minus = flat.copy(), flat.copy()
            plus[column] += step
            minus[column] -= step
            derivative = (stacked_residual(spec, plus.reshape(stacked.shape)) - stacked_residual(spec, minus.reshape(stacked.shape))) / (2 * step)
            numeric[:, column] = -derivative.ravel()
        assert np.linalg.norm(matrix - numeric) / np.linalg.norm(matrix) <= 1e-5


def test_invertible_at_canonical_solution(small_canonical):
    _, upper = default_bounds(small_canonical)
    state = solve_system(small_canonical, upper).state
    report = check_invertibility(assemble_frechet(small_canonical, state))
    assert report.invertible
    assert report.sigma_min > report.threshold == pytest.approx(1e-8 * report.norm_inf)
    assert report.symmetric_min_eigenvalue is not None and report.symmetric_min_eigenvalue > 0


def test_singular_frechet_detected(interval_50):
    lam = lambda1(interval_50)
    spec = two_species(interval_50, a=(lam, lam), working_max=2.0 * lam)
    zero = SystemState(fields=[ScalarField.zeros(interval_50), ScalarField.zeros(interval_50)])
    report = check_invertibility(assemble_frechet(spec, zero))
    assert not report.invertible


def test_extinction_from_boundary_start():
    spec, _ = create_sample_spec("extinction", grid_n=100)
    survivor = theta(spec.grid, spec.species[1].h).theta
    start = SystemState(fields=[ScalarField.zeros(spec.grid), survivor])
    report = solve_system(spec, start)
    assert report.converged
    u1, u2 = report.state.stacked()
    assert float(np.max(np.abs(u1))) < 1e-6
    np.testing.assert_allclose(u2, survivor.values, atol=1e-8)


def test_multi_start_small_canonical(small_canonical):
    report = multi_start_uniqueness(small_canonical, 6, seed=0)
    assert report.unique
    assert len(report.distinct_solutions) == 1
    assert sum(report.cluster_sizes) + report.extinct + report.non_converged == 6
    assert report.verdict == "empirically unique (6 starts)"


def test_multi_start_is_deterministic(small_canonical):
    first = multi_start_uniqueness(small_canonical, 5, seed=3)
    second = multi_start_uniqueness(small_canonical, 5, seed=3)
    assert first.distinct_solutions[0].distance(second.distinct_solutions[0]) == 0.0


def test_multi_start_needs_two_starts(small_canonical):
    with pytest.raises(InvalidArgumentError):
        multi_start_uniqueness(small_canonical, 1, seed=0)


def test_wrong_species_count_rejected(small_canonical):
    state = SystemState(fields=[ScalarField.zeros(small_canonical.grid)])
    with pytest.raises(InvalidArgumentError):
        solve_system(small_canonical, state)


@pytest.mark.slow
def test_canonical_multi_start_finds_one_cluster(canonical_spec):
    report = multi_start_uniqueness(canonical_spec, 20, seed=0)
    assert report.unique
    assert len(report.distinct_solutions) == 1
    assert report.non_converged == 0


@pytest.mark.slow
def test_canonical_multi_start_never_ends_extinct(canonical_spec):
    report = multi_start_uniqueness(canonical_spec, 20, seed=0)
    assert report.extinct == 0
    assert report.boundary_states == []
    assert sum(report.cluster_sizes) == 20


def test_small_canonical_starts_stay_positive(small_canonical):
    report = multi_start_uniqueness(small_canonical, 12, seed=0)
    assert report.extinct == 0
    assert report.non_converged == 0
    assert report.unique


@pytest.mark.parametrize("rho", [(0.37, 0.49), (0.06, 0.9), (0.05, 0.05)])
def test_hybrid_recovers_from_low_starts(small_canonical, rho):
    _, upper = default_bounds(small_canonical)
    reference = solve_system(small_canonical, upper, SolveMethod.NEWTON).state
    start = SystemState.from_stacked(small_canonical.grid, np.asarray(rho)[:, None] * upper.stacked())
    report = solve_system(small_canonical, start)
    assert report.converged
    assert report.state.distance(reference) <= 1e-7


def test_newton_step_never_zeroes_a_positive_species(small_canonical):
    _, upper = default_bounds(small_canonical)
    start = SystemState.from_stacked(small_canonical.grid, np.array([[0.37], [0.49]]) * upper.stacked())
    settings = get_settings().with_overrides(newton_max_iter=1)
    report = solve_system(small_canonical, start, SolveMethod.NEWTON, settings)
    u = report.state.stacked()
    assert np.all(u >= 0.1 * start.stacked() - 1e-12)


def test_reported_residual_is_the_raw_sup_norm(small_canonical):
    settings = get_settings()
    _, upper = default_bounds(small_canonical)
    for method in SolveMethod:
        report = solve_system(small_canonical, upper, method)
        raw = stacked_residual(small_canonical, report.state.stacked())
        assert report.residual == pytest.approx(float(np.max(np.abs(raw))), rel=1e-12, abs=1e-300)
        assert report.residual <= settings.tol_res


@pytest.mark.slow
def test_picard_matches_newton_at_full_resolution(canonical_spec):
    lower, upper = default_bounds(canonical_spec)
    newton = solve_system(canonical_spec, upper, SolveMethod.NEWTON)
    picard = solve_system(canonical_spec, lower, SolveMethod.PICARD)
    assert newton.converged and picard.converged
    assert picard.residual <= 1e-8
    assert picard.state.distance(newton.state) <= 1e-7


def test_different_seeds_find_the_same_state(small_canonical):
    first = multi_start_uniqueness(small_canonical, 6, seed=0)
    second = multi_start_uniqueness(small_canonical, 6, seed=7)
    assert first.unique and second.unique
    assert first.distinct_solutions[0].distance(second.distinct_solutions[0]) <= 1e-7
    _, upper = default_bounds(small_canonical)
    start = SystemState.from_stacked(small_canonical.grid, np.array([[0.2], [0.9]]) * upper.stacked())
    assert solve_system(small_canonical, start).state.distance(first.distinct_solutions[0]) <= 1e-7


@pytest.mark.parametrize(
    "name, grid_n",
    [("canonical", 30), ("symmetric", 30), ("three_species", 20), ("saturating", 30), ("tabulated", 30), ("rectangle", 12)],
)
def test_solutions_lie_between_the_bounds(name, grid_n):
    spec, _ = create_sample_spec(name, grid_n=grid_n)
    settings = get_settings()
    lower, upper = default_bounds(spec)
    report = solve_system(spec, upper, bounds=(lower, upper))
    assert report.converged
    assert report.within_bounds
    u = report.state.stacked()
    assert np.all(u >= lower.stacked() - settings.bounds_slack)
    assert np.all(u <= upper.stacked() + settings.bounds_slack)


def test_degenerate_bound_warned_once():
    spec, _ = create_sample_spec("extinction", grid_n=50)
    progress.start()
    multi_start_uniqueness(spec, 10, seed=0)
    bound_warnings = [entry for entry in progress.warnings if entry["stage"] == "bounds"]
    assert bound_warnings == [{"stage": "bounds", "subject": "species 1", "message": bound_warnings[0]["message"]}]


def test_warnings_are_recorded_once_and_sorted():
    tracker = ProgressTracker(verbose=False)
    tracker.warn("multi-start", None, "3 of 10 starts did not converge")
    tracker.warn("bounds", "species 2", "degenerate")
    tracker.warn("bounds", "species 1", "degenerate")
    tracker.warn("bounds", "species 2", "degenerate")
    assert len(tracker.warnings) == 3
    assert [(entry["stage"], entry["subject"]) for entry in tracker.sorted_warnings()] == [("bounds", "species 1"), ("bounds", "species 2"), ("multi-start", None)]


def test_invertibility_reports_unfinished_iteration(small_canonical):
    _, upper = default_bounds(small_canonical)
    frechet = assemble_frechet(small_canonical, solve_system(small_canonical, upper).state)
    assert check_invertibility(frechet).diagnostic == ""
    report = check_invertibility(frechet, get_settings().with_overrides(invertibility_max_iter=1))
    assert report.iterations == 1
    assert report.diagnostic == "inverse iteration did not converge"
