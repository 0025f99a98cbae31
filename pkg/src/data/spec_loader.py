"""
TOML spec files.

    [domain]            kind, lengths, counts, optional working_max
    [solver]            any SolverSettings field
    [species.<i>]       h = {family, params, knots, values}, g = {family, coeffs, saturation, absent}

Syntax and schema problems raise SpecParseError; invariant violations of the built
functions raise SpecViolationError / InvalidArgumentError.
"""

import re
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError

from data.errors import SpecParseError, SpecViolationError
from data.functions import GrowthFunction, InteractionFunction, SystemSpec, build_system_spec, natural_root
from data.models import GridKind, GrowthFamily, InteractionFamily
from data.settings import SolverSettings
from pde.grid import build_grid

PARAM_COUNTS = {GrowthFamily.AFFINE: (2,), GrowthFamily.SATURATING: (3,), GrowthFamily.TABULATED: (0, 2)}
LOCATION_PATTERN = re.compile(r"line (\d+), column (\d+)")


class RawDomain(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: GridKind
    lengths: List[float]
    counts: List[int]
    working_max: Optional[float] = None


class RawGrowth(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: GrowthFamily
    params: List[float] = []
    knots: List[float] = []
    values: List[float] = []


class RawInteraction(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: InteractionFamily
    coeffs: List[float]
    saturation: List[float] = []
    absent: List[bool] = []


class RawSpecies(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h: RawGrowth
    g: RawInteraction


class RawSpecFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: RawDomain
    solver: Dict[str, Any] = {}
    species: Dict[str, RawSpecies]


def _schema_error(exc: ValidationError) -> SpecParseError:
    first = exc.errors()[0]
    where = ".".join(str(part) for part in first["loc"])
    return SpecParseError(f"{where}: {first['msg']} ({exc.error_count()} schema error(s))")


def _parse(text: str) -> RawSpecFile:
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = LOCATION_PATTERN.search(str(exc))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (None, None)
        raise SpecParseError(str(exc).split(" (at line")[0], line=line, column=column) from exc
    try:
        return RawSpecFile.model_validate(document)
    except ValidationError as exc:
        raise _schema_error(exc) from exc


def _ordered_species(raw: RawSpecFile) -> List[RawSpecies]:
    expected = [str(i) for i in range(1, len(raw.species) + 1)]
    if sorted(raw.species, key=lambda key: (len(key), key)) != expected:
        raise SpecParseError(f"species tables must be numbered 1..{len(raw.species)}, got {sorted(raw.species)}")
    for key in expected:
        growth = raw.species[key].h
        if len(growth.params) not in PARAM_COUNTS[growth.family]:
            raise SpecParseError(f"species.{key}.h.params: {growth.family.value} takes {PARAM_COUNTS[growth.family]} parameters, got {len(growth.params)}")
    return [raw.species[key] for key in expected]


def _growth_kwargs(raw: RawGrowth) -> Dict[str, Any]:
    kwargs: Dict[str, Any] = {"family": raw.family}
    if raw.family == GrowthFamily.TABULATED:
        kwargs.update(knots=tuple(raw.knots), samples=tuple(raw.values))
        if raw.params:
            kwargs.update(a=raw.params[0], b=raw.params[1])
    else:
        kwargs.update(dict(zip(("a", "b", "s"), raw.params)))
    return kwargs


def _default_working_max(species: List[RawSpecies]) -> float:
    """2·max k_i, capped by the shortest tabulated range."""
    roots = []
    for index, sp in enumerate(species, start=1):
        kwargs = _growth_kwargs(sp.h)
        root = natural_root(sp.h.family, kwargs.get("a", 0.0), kwargs.get("b", 0.0), kwargs.get("s", 1.0), sp.h.knots, sp.h.values)
        if root is None or root <= 0:
            raise SpecViolationError(f"species {index}: h has no positive root")
        roots.append(root)
    working_max = 2.0 * max(roots)
    tabulated_ends = [sp.h.knots[-1] for sp in species if sp.h.family == GrowthFamily.TABULATED and sp.h.knots]
    if tabulated_ends:
        working_max = min(working_max, min(tabulated_ends))
    return working_max


def load_spec_text(text: str, grid_n: Optional[int] = None) -> Tuple[SystemSpec, Dict[str, Any]]:
    """SystemSpec plus the validated [solver] overrides."""
    raw = _parse(text)
    species = _ordered_species(raw)
    try:
        SolverSettings().with_overrides(**raw.solver)
    except ValidationError as exc:
        raise _schema_error(exc) from exc

    counts = [grid_n] * len(raw.domain.counts) if grid_n is not None else raw.domain.counts
    grid = build_grid(raw.domain.kind, raw.domain.lengths, counts)
    working_max = raw.domain.working_max if raw.domain.working_max is not None else _default_working_max(species)

    growths = [GrowthFunction(working_max=working_max, **_growth_kwargs(sp.h)) for sp in species]
    interactions = [
        InteractionFunction(family=sp.g.family, coefficients=tuple(sp.g.coeffs), saturation=tuple(sp.g.saturation), absent=tuple(sp.g.absent))
        for sp in species
    ]
    return build_system_spec(grid, growths, interactions), dict(raw.solver)


def load_spec(path: str | Path, grid_n: Optional[int] = None) -> Tuple[SystemSpec, Dict[str, Any]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"cannot read spec file {path}: {exc}") from exc
    return load_spec_text(text, grid_n)
