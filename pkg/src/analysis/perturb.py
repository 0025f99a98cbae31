"""
Perturbation of the growth functions inside a small C¹ ball.

Directions act on family parameters: affine (a, b), saturating (a, b, s), and for
tabulated growth a vertical shift a and a slope tilt b of the interpolant.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from analysis.conditions import check_cor34
from data.errors import InvalidArgumentError, InvalidPerturbationError, LabError, SpecViolationError
from data.functions import GrowthFunction, SpeciesSpec, SystemSpec, root_of_h
from data.models import GrowthFamily, PerturbationCell, PerturbationDirection, PerturbationReport, SolveMethod, SpeciesOffset, UniquenessReport
from data.settings import SolverSettings, resolve
from pde.system import multi_start_uniqueness
from utils.progress import progress

DEFAULT_DELTAS = (1e-4, 1e-3, 1e-2, 5e-2, 1e-1)
DEFAULT_DIRECTIONS = 8
DEFAULT_STARTS = 12
DIRECTION_STREAM = 1


def _scan_points(h: GrowthFunction) -> np.ndarray:
    return np.linspace(0.0, h.working_max, h.scan_samples)


def _tangent(h: GrowthFunction, offset: SpeciesOffset, u: np.ndarray):
    """Values and u-derivatives of d/dδ h(params + δ·offset) at δ = 0."""
    if h.family == GrowthFamily.SATURATING:
        x = u / h.s
        sech2 = 1.0 / np.cosh(x) ** 2
        values = offset.da - offset.db * np.tanh(x) + offset.ds * h.b * u / h.s**2 * sech2
        slopes = -offset.db / h.s * sech2 + offset.ds * h.b / h.s**2 * sech2 * (1.0 - 2.0 * x * np.tanh(x))
        return values, slopes
    return offset.da - offset.db * u, np.full_like(u, -offset.db)


def species_c1_norm(h: GrowthFunction, offset: SpeciesOffset) -> float:
    u = _scan_points(h)
    values, slopes = _tangent(h, offset, u)
    return float(np.max(np.abs(values)) + np.max(np.abs(slopes)))


def c1_norm(spec: SystemSpec, direction: PerturbationDirection) -> float:
    """Product-space norm: the largest per-species C¹ norm of the parameter tangent."""
    return max(species_c1_norm(sp.h, offset) for sp, offset in zip(spec.species, direction.offsets))


def c1_distance(h: GrowthFunction, h_bar: GrowthFunction) -> float:
    """sup |h - h̄| + sup |h' - h̄'| over the common working range."""
    if h.working_max != h_bar.working_max:
        raise InvalidArgumentError("C¹ distance needs a common working range")
    if h.family == GrowthFamily.AFFINE and h_bar.family == GrowthFamily.AFFINE:
        da, db = h_bar.a - h.a, h_bar.b - h.b
        return max(abs(da), abs(da - db * h.working_max)) + abs(db)
    u = _scan_points(h)
    return float(np.max(np.abs(h.value(u) - h_bar.value(u))) + np.max(np.abs(h.derivative(u) - h_bar.derivative(u))))


def _normalized(spec: SystemSpec, direction_id: int, offsets: Sequence[SpeciesOffset]) -> PerturbationDirection:
    raw = PerturbationDirection(direction_id=direction_id, offsets=tuple(offsets))
    norm = c1_norm(spec, raw)
    if norm == 0:
        raise InvalidArgumentError("perturbation direction has zero C¹ norm")
    return PerturbationDirection(direction_id=direction_id, offsets=tuple(offset.scaled(1.0 / norm) for offset in offsets))


def unit_direction(spec: SystemSpec, species: int, parameter: str, direction_id: int = 0) -> PerturbationDirection:
    """Unit direction moving one parameter ('a', 'b' or 's') of one species (0-based)."""
    if parameter not in ("a", "b", "s"):
        raise InvalidArgumentError(f"unknown growth parameter {parameter!r}")
    offsets = [SpeciesOffset() for _ in spec.species]
    offsets[species] = SpeciesOffset(**{f"d{parameter}": 1.0})
    return _normalized(spec, direction_id, offsets)


def random_direction(spec: SystemSpec, seed: int, direction_id: int) -> PerturbationDirection:
    rng = np.random.default_rng([seed, DIRECTION_STREAM, direction_id])
    offsets = []
    for sp in spec.species:
        da, db, ds = rng.standard_normal(3)
        offsets.append(SpeciesOffset(da=da, db=db, ds=ds if sp.h.family == GrowthFamily.SATURATING else 0.0))
    return _normalized(spec, direction_id, offsets)


def random_directions(spec: SystemSpec, n_directions: int, seed: int) -> List[PerturbationDirection]:
    return [random_direction(spec, seed, index) for index in range(n_directions)]


def perturb_spec(spec: SystemSpec, direction: PerturbationDirection, delta: float) -> SystemSpec:
    """h_i -> h_i + δ·direction_i, with every k_i recomputed."""
    if not np.isfinite(delta) or delta < 0:
        raise InvalidArgumentError(f"delta must be >= 0, got {delta}")
    if len(direction.offsets) != spec.n_species:
        raise InvalidArgumentError("direction must carry one offset per species")
    if delta == 0:
        return spec
    species = []
    for index, (sp, offset) in enumerate(zip(spec.species, direction.offsets), start=1):
        h = sp.h
        try:
            h_bar = GrowthFunction(**{**h.model_dump(), "a": h.a + delta * offset.da, "b": h.b + delta * offset.db, "s": h.s + delta * offset.ds})
            species.append(SpeciesSpec(h=h_bar, g=sp.g, k=root_of_h(h_bar)))
        except SpecViolationError as exc:
            raise InvalidPerturbationError(f"species {index}: {exc}") from exc
    return SystemSpec(grid=spec.grid, species=tuple(species))


def _base_exploratory(spec: SystemSpec, settings: SolverSettings) -> bool:
    try:
        return not check_cor34(spec, settings).all_passed
    except LabError:
        return True


def _representative(report: UniquenessReport) -> Optional[np.ndarray]:
    return report.distinct_solutions[0].stacked() if report.distinct_solutions else None


def perturbation_sweep(
    spec: SystemSpec,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    n_directions: int = DEFAULT_DIRECTIONS,
    n_starts: int = DEFAULT_STARTS,
    seed: int = 0,
    method: SolveMethod = SolveMethod.HYBRID,
    settings: SolverSettings | None = None,
) -> PerturbationReport:
    settings = resolve(settings)
    deltas = sorted(float(delta) for delta in deltas)
    if any(delta < 0 for delta in deltas):
        raise InvalidArgumentError("deltas must be >= 0")
    exploratory = _base_exploratory(spec, settings)
    if exploratory:
        progress.warn("perturbation", None, "base spec does not pass the combined condition; sweep is exploratory")

    progress.update_status("perturbation", "base", f"multi-start with {n_starts} starts")
    base = multi_start_uniqueness(spec, n_starts, seed, method, settings)
    base_state = _representative(base)
    directions = random_directions(spec, n_directions, seed)

    def run(cell) -> PerturbationCell:
        direction, delta = cell
        progress.update_status("perturbation", f"direction {direction.direction_id} δ={delta:g}", "solving")
        if delta == 0:
            report = base
        else:
            try:
                report = multi_start_uniqueness(perturb_spec(spec, direction, delta), n_starts, seed, method, settings)
            except InvalidPerturbationError as exc:
                return PerturbationCell(direction_id=direction.direction_id, delta=delta, unique=None, distance=None, converged=0, clusters=0, note=str(exc))
        state = _representative(report)
        distance = float(np.max(np.abs(state - base_state))) if state is not None and base_state is not None else None
        unique = None if report.inconclusive else report.unique
        return PerturbationCell(direction_id=direction.direction_id, delta=delta, unique=unique, distance=distance, converged=report.converged, clusters=len(report.distinct_solutions), note=report.verdict)

    grid = [(direction, delta) for delta in deltas for direction in directions]
    with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
        cells = list(pool.map(run, grid))

    max_unique = None
    for delta in deltas:
        if not all(cell.unique for cell in cells if cell.delta == delta):
            break
        max_unique = delta
    return PerturbationReport(cells=cells, deltas=deltas, n_directions=n_directions, n_starts=n_starts, seed=seed, exploratory=exploratory, max_unique_delta=max_unique)


def sweep_frame(report: PerturbationReport) -> pd.DataFrame:
    """Flat plot table: direction_id, delta, unique, distance."""
    return pd.DataFrame(
        [{"direction_id": cell.direction_id, "delta": cell.delta, "unique": cell.unique, "distance": cell.distance} for cell in report.cells],
        columns=["direction_id", "delta", "unique", "distance"],
    )
