import numpy as np
import pytest

from conftest import two_species
from data.errors import InvalidArgumentError, SpecViolationError
from data.functions import (
    GrowthFunction,
    InteractionFunction,
    SystemSpec,
    eval_h,
    inf_neg_h_prime,
    inf_partial,
    interaction_at_roots,
    root_of_h,
    slot_of,
    sup_h_prime,
    sup_partial,
)
from data.models import GrowthFamily, InteractionFamily


def affine(a=12.0, b=1.0, working_max=24.0):
    return GrowthFunction(family=GrowthFamily.AFFINE, a=a, b=b, working_max=working_max)


def saturating(a=12.0, b=24.0, s=4.0, working_max=8.0):
    return GrowthFunction(family=GrowthFamily.SATURATING, a=a, b=b, s=s, working_max=working_max)


def tabulated():
    knots = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    samples = (12.0, 6.75, 1.0, -5.25, -12.0, -19.25, -27.0)
    return GrowthFunction(family=GrowthFamily.TABULATED, knots=knots, samples=samples, working_max=24.0)


def test_affine_root_is_closed_form():
    assert root_of_h(affine(12.0, 2.0)) == 6.0


def test_saturating_root():
    assert root_of_h(saturating()) == pytest.approx(4.0 * np.arctanh(0.5), abs=1e-10)


@pytest.mark.parametrize("h", [affine(), saturating(), tabulated()], ids=["affine", "saturating", "tabulated"])
def test_root_sign_change(h):
    k = root_of_h(h)
    delta = 1e-6 * h.working_max
    assert h.value(k - delta) > 0
    assert h.value(k + delta) < 0


@pytest.mark.parametrize("h", [affine(), saturating(), tabulated()], ids=["affine", "saturating", "tabulated"])
def test_eval_h_is_decreasing(h):
    values = eval_h(h, np.linspace(0.0, h.working_max, 2001))
    assert np.all(np.diff(values) < 0)


def test_tabulated_interpolant_passes_through_samples():
    h = tabulated()
    np.testing.assert_allclose(h.value(np.array([0.0, 5.0, 10.0, 15.0, 20.0])), [12.0, 6.75, 1.0, -5.25, -12.0], atol=1e-12)


def test_tabulated_shift_and_tilt():
    base = tabulated()
    moved = GrowthFunction(**{**base.model_dump(), "a": 0.5, "b": 0.1})
    assert moved.value(10.0) == pytest.approx(base.value(10.0) + 0.5 - 1.0)


def test_growth_is_clamped_to_working_range():
    h = affine()
    assert h.value(-3.0) == h.value(0.0)
    assert h.value(100.0) == h.value(24.0)


def test_inf_neg_h_prime_affine_is_exact():
    assert inf_neg_h_prime(affine(12.0, 1.5)) == 1.5
    assert sup_h_prime(affine(12.0, 1.5)) == -1.5


def test_inf_neg_h_prime_saturating_is_a_certified_lower_bound():
    exact = 6.0 / np.cosh(2.0) ** 2
    bound = inf_neg_h_prime(saturating())
    assert bound <= exact + 1e-12
    assert bound >= exact - 1e-2
    assert sup_h_prime(saturating()) >= -exact - 1e-12


def test_sup_partial_linear_is_the_coefficient():
    g = InteractionFunction(family=InteractionFamily.LINEAR, coefficients=(0.05, 0.3), working_box=(10.0, 10.0))
    assert sup_partial(g, 0) == 0.05
    assert sup_partial(g, 1) == 0.3
    assert inf_partial(g, 1) == 0.3


def test_saturating_interaction_partials():
    g = InteractionFunction(family=InteractionFamily.SATURATING_LINEAR, coefficients=(0.5,), saturation=(0.2,), working_box=(10.0,))
    assert sup_partial(g, 0) == 0.5
    assert inf_partial(g, 0) == pytest.approx(0.5 / 9.0)
    assert g.value(np.array([5.0])) == pytest.approx(0.5 * 5.0 / 2.0)
    assert g.partial(np.array([5.0]), 0) == pytest.approx(0.5 / 4.0)


def test_interaction_value_is_vectorized():
    g = InteractionFunction(family=InteractionFamily.LINEAR, coefficients=(1.0, 2.0))
    values = g.value(np.array([[1.0, 2.0, 3.0], [0.5, 0.0, 1.0]]))
    np.testing.assert_allclose(values, [2.0, 2.0, 5.0])
    assert g.value(np.zeros(2)) == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family=GrowthFamily.AFFINE, a=12.0, b=0.0, working_max=24.0),
        dict(family=GrowthFamily.AFFINE, a=-1.0, b=1.0, working_max=24.0),
        dict(family=GrowthFamily.AFFINE, a=12.0, b=1.0, working_max=10.0),
        dict(family=GrowthFamily.SATURATING, a=30.0, b=24.0, s=4.0, working_max=8.0),
        dict(family=GrowthFamily.TABULATED, knots=(0.0, 1.0, 2.0), samples=(1.0, 2.0, -1.0), working_max=2.0),
        dict(family=GrowthFamily.TABULATED, knots=(0.0, 1.0), samples=(1.0, -1.0), working_max=5.0),
    ],
    ids=["b-zero", "h0-negative", "no-root-in-range", "saturating-no-root", "tabulated-increasing", "tabulated-short"],
)
def test_invalid_growth_rejected(kwargs):
    with pytest.raises(SpecViolationError):
        GrowthFunction(**kwargs)


def test_invalid_interaction_rejected():
    with pytest.raises(SpecViolationError):
        InteractionFunction(family=InteractionFamily.LINEAR, coefficients=(-0.1,))
    with pytest.raises(SpecViolationError):
        InteractionFunction(family=InteractionFamily.LINEAR, coefficients=(0.1,), saturation=(0.5,))


def test_slot_of_skips_the_species_itself():
    assert slot_of(0, 1) == 0
    assert slot_of(2, 0) == 0
    assert slot_of(2, 1) == 1
    assert slot_of(1, 2) == 1
    with pytest.raises(InvalidArgumentError):
        slot_of(1, 1)


def test_build_system_spec_fills_roots_and_boxes(interval_50):
    spec = two_species(interval_50, a=(12.0, 15.0))
    np.testing.assert_allclose(spec.roots(), [12.0, 15.0])
    assert spec.species[0].g.working_box == (24.0,)
    assert interaction_at_roots(spec, 0) == pytest.approx(0.05 * 15.0)


def test_system_spec_invariants(interval_50):
    spec = two_species(interval_50)
    with pytest.raises(SpecViolationError):
        SystemSpec(grid=interval_50, species=spec.species[:1])
    wrong_root = spec.species[0].model_copy(update={"k": 11.0})
    with pytest.raises(SpecViolationError):
        SystemSpec(grid=interval_50, species=(wrong_root, spec.species[1]))
