import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from data.functions import GrowthFunction, InteractionFunction, build_system_spec  # noqa: E402
from data.models import GrowthFamily, InteractionFamily  # noqa: E402
from data.samples import create_sample_spec  # noqa: E402
from pde.grid import build_grid  # noqa: E402
from utils.progress import progress  # noqa: E402

progress.verbose = False


def two_species(grid, a=(12.0, 12.0), c=(0.05, 0.05), b=(1.0, 1.0), working_max=24.0, absent=False):
    """Two affine species with linear competition on the given grid."""
    growths = [GrowthFunction(family=GrowthFamily.AFFINE, a=ai, b=bi, working_max=working_max) for ai, bi in zip(a, b)]
    interactions = [InteractionFunction(family=InteractionFamily.LINEAR, coefficients=(ci,), absent=(absent,)) for ci in c]
    return build_system_spec(grid, growths, interactions)


@pytest.fixture
def interval_200():
    return build_grid("interval", [1.0], [200])


@pytest.fixture
def interval_50():
    return build_grid("interval", [1.0], [50])


@pytest.fixture
def canonical_spec():
    return create_sample_spec("canonical")[0]


@pytest.fixture
def small_canonical():
    return create_sample_spec("canonical", grid_n=50)[0]
