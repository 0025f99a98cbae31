import numpy as np
import pytest

from conftest import two_species
from analysis.perturb import c1_distance, c1_norm, perturb_spec, perturbation_sweep, random_direction, sweep_frame, unit_direction
from data.errors import InvalidArgumentError, InvalidPerturbationError
from data.models import PerturbationDirection, SpeciesOffset
from data.samples import create_sample_spec


def test_unit_directions_have_unit_norm(small_canonical):
    for parameter in ("a", "b"):
        direction = unit_direction(small_canonical, 0, parameter)
        assert c1_norm(small_canonical, direction) == pytest.approx(1.0)
    # slope moves cost more: sup |u| over [0, 24] plus the slope itself
    assert unit_direction(small_canonical, 1, "b").offsets[1].db == pytest.approx(1.0 / 25.0)


def test_unknown_parameter_rejected(small_canonical):
    with pytest.raises(InvalidArgumentError):
        unit_direction(small_canonical, 0, "k")


def test_random_direction_is_deterministic(small_canonical):
    first = random_direction(small_canonical, seed=7, direction_id=2)
    assert first == random_direction(small_canonical, seed=7, direction_id=2)
    assert first != random_direction(small_canonical, seed=7, direction_id=3)
    assert c1_norm(small_canonical, first) == pytest.approx(1.0)
    assert all(offset.ds == 0.0 for offset in first.offsets)


def test_zero_delta_returns_the_base_spec(small_canonical):
    direction = unit_direction(small_canonical, 0, "a")
    assert perturb_spec(small_canonical, direction, 0.0) is small_canonical


def test_perturbed_roots_are_recomputed(small_canonical):
    perturbed = perturb_spec(small_canonical, unit_direction(small_canonical, 0, "a"), 0.5)
    assert perturbed.species[0].k == pytest.approx(12.5)
    assert perturbed.species[1].k == pytest.approx(12.0)


def test_c1_distance_matches_delta(small_canonical):
    delta = 1e-2
    perturbed = perturb_spec(small_canonical, unit_direction(small_canonical, 0, "a"), delta)
    assert c1_distance(small_canonical.species[0].h, perturbed.species[0].h) == pytest.approx(delta)
    assert c1_distance(small_canonical.species[1].h, perturbed.species[1].h) == 0.0


def test_perturbation_leaving_the_class(small_canonical):
    direction = PerturbationDirection(direction_id=0, offsets=(SpeciesOffset(da=-1.0), SpeciesOffset()))
    with pytest.raises(InvalidPerturbationError, match="species 1"):
        perturb_spec(small_canonical, direction, 20.0)


def test_negative_delta_rejected(small_canonical):
    direction = unit_direction(small_canonical, 0, "a")
    with pytest.raises(InvalidArgumentError):
        perturb_spec(small_canonical, direction, -1e-3)
    with pytest.raises(InvalidArgumentError):
        perturbation_sweep(small_canonical, deltas=(-1e-3,), n_directions=1, n_starts=2)


def test_saturating_scale_direction():
    spec, _ = create_sample_spec("saturating", grid_n=50)
    direction = unit_direction(spec, 1, "s")
    assert c1_norm(spec, direction) == pytest.approx(1.0)
    perturbed = perturb_spec(spec, direction, 0.1)
    s = perturbed.species[1].h.s
    assert s > 4.0
    assert perturbed.species[1].k == pytest.approx(s * np.arctanh(0.5), rel=1e-6)


def test_small_sweep_stays_unique(small_canonical):
    report = perturbation_sweep(small_canonical, deltas=(1e-2, 1e-3), n_directions=2, n_starts=4, seed=0)
    assert report.deltas == [1e-3, 1e-2]
    assert not report.exploratory
    assert len(report.cells) == 4
    assert all(cell.unique for cell in report.cells)
    assert report.max_unique_delta == 1e-2
    for cell in report.cells:
        assert 0.0 < cell.distance <= 10.0 * cell.delta

    frame = sweep_frame(report)
    assert list(frame.columns) == ["direction_id", "delta", "unique", "distance"]
    assert sorted(frame["direction_id"].unique()) == [0, 1]


def test_sweep_flags_exploratory_base(interval_50):
    spec = two_species(interval_50, c=(0.17, 0.17))
    report = perturbation_sweep(spec, deltas=(0.0,), n_directions=1, n_starts=2, seed=0)
    assert report.exploratory
    assert report.cells[0].delta == 0.0


def test_distance_grows_linearly_with_delta(small_canonical):
    report = perturbation_sweep(small_canonical, deltas=(1e-3, 1e-2), n_directions=8, n_starts=2, seed=0)
    assert len(report.cells) == 16
    assert all(cell.unique for cell in report.cells)
    by_direction = {}
    for cell in report.cells:
        by_direction.setdefault(cell.direction_id, {})[cell.delta] = cell.distance
    assert len(by_direction) == 8
    for distances in by_direction.values():
        assert distances[1e-3] < distances[1e-2]
        assert 0.05 <= distances[1e-3] / distances[1e-2] <= 0.2


def test_zero_delta_cell_matches_the_base(small_canonical):
    report = perturbation_sweep(small_canonical, deltas=(0.0, 1e-3), n_directions=2, n_starts=2, seed=0)
    zero_cells = [cell for cell in report.cells if cell.delta == 0.0]
    assert len(zero_cells) == 2
    for cell in zero_cells:
        assert cell.unique
        assert cell.distance <= 1e-7
