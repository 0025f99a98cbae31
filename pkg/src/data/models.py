from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Optional, Dict, Any, Tuple
from enum import Enum
import numpy as np

from data.errors import InvalidArgumentError


class GridKind(str, Enum):
    INTERVAL = "interval"
    RECTANGLE = "rectangle"


class GrowthFamily(str, Enum):
    AFFINE = "affine"
    SATURATING = "saturating"
    TABULATED = "tabulated"


class InteractionFamily(str, Enum):
    LINEAR = "linear"
    SATURATING_LINEAR = "saturating_linear"


class SolveMethod(str, Enum):
    NEWTON = "newton"
    PICARD = "picard"
    HYBRID = "hybrid"


class Command(str, Enum):
    SOLVE = "solve"
    EIGEN = "eigen"
    LOGISTIC = "logistic"
    CHECK = "check"
    UNIQUENESS = "uniqueness"
    PERTURB = "perturb"
    CERTIFY = "certify"


class Grid(BaseModel):
    """Uniform interior grid of an interval or rectangle; boundary nodes are implied."""

    model_config = ConfigDict(frozen=True)

    kind: GridKind
    lengths: Tuple[float, ...]
    interior_counts: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_shape(self):
        axes = 1 if self.kind == GridKind.INTERVAL else 2
        if len(self.lengths) != axes or len(self.interior_counts) != axes:
            raise InvalidArgumentError(f"{self.kind.value} grid needs {axes} length(s) and count(s)")
        if any(not np.isfinite(length) or length <= 0 for length in self.lengths):
            raise InvalidArgumentError(f"grid lengths must be positive, got {self.lengths}")
        if any(count < 3 for count in self.interior_counts):
            raise InvalidArgumentError(f"interior counts must be at least 3, got {self.interior_counts}")
        return self

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(length / (count + 1) for length, count in zip(self.lengths, self.interior_counts))

    @property
    def size(self) -> int:
        return int(np.prod(self.interior_counts))

    def axis_coordinates(self) -> List[np.ndarray]:
        return [np.arange(1, count + 1) * h for count, h in zip(self.interior_counts, self.spacing)]

    def node_coordinates(self) -> np.ndarray:
        """(M, dim) coordinates, x varying fastest (row order of the field CSV)"""
        axes = self.axis_coordinates()
        if self.dim == 1:
            return axes[0][:, None]
        yy, xx = np.meshgrid(axes[1], axes[0], indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


class ScalarField(BaseModel):
    """Values on the interior nodes of a grid (zero boundary implied)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, value):
        array = np.array(value, dtype=float, copy=True).ravel()
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_values(self):
        if self.values.shape[0] != self.grid.size:
            raise InvalidArgumentError(f"field has {self.values.shape[0]} values, grid has {self.grid.size} nodes")
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("field values must be finite")
        return self

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid=grid, values=np.zeros(grid.size))


class SystemState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    fields: List[ScalarField]

    @model_validator(mode="after")
    def _check_fields(self):
        if not self.fields:
            raise InvalidArgumentError("a system state needs at least one field")
        grid = self.fields[0].grid
        if any(field.grid != grid for field in self.fields):
            raise InvalidArgumentError("all species fields must live on the same grid")
        if any(np.any(field.values < 0) for field in self.fields):
            raise InvalidArgumentError("species densities must be non-negative")
        return self

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    def stacked(self) -> np.ndarray:
        return np.vstack([field.values for field in self.fields])

    @classmethod
    def from_stacked(cls, grid: Grid, stacked: np.ndarray) -> "SystemState":
        return cls(fields=[ScalarField(grid=grid, values=row) for row in np.asarray(stacked)])

    def distance(self, other: "SystemState") -> float:
        return float(np.max(np.abs(self.stacked() - other.stacked())))


class EigenPair(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eigenvalue: float
    phi: ScalarField
    residual: float
    iterations: int


class LogisticSolution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    theta: ScalarField
    iterations: int
    residual: float
    tolerance: float = 0.0
    positive: bool
    c0: float = 0.0
    shift_m: float = 0.0
    super_iterations: int = 0
    sub_iterations: int = 0
    branch_gap: float = 0.0
    gap: float = 0.0
    monotonicity_defect: float = 0.0
    polished: bool = False


class SolutionCheck(BaseModel):
    """Sign check of Δu + u f(u) for super/sub solution candidates."""

    kind: str
    passed: bool
    tolerance: float
    worst_node: int
    worst_value: float
    location: List[float]


class SolveReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    state: SystemState
    converged: bool
    residual: float
    tolerance: float = 0.0
    iterations: int
    within_bounds: bool
    method: SolveMethod
    bounds_excess: float = 0.0
    note: str = ""


class FrechetMatrix(BaseModel):
    """Block operator B = -∂r/∂u assembled at a state; blocks are M×M sparse matrices."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    blocks: List[List[Any]]
    state: SystemState

    @property
    def n_species(self) -> int:
        return len(self.blocks)

    def matrix(self):
        from scipy.sparse import bmat

        return bmat(self.blocks, format="csc")


class InvertibilityReport(BaseModel):
    invertible: bool
    sigma_min: float
    norm_inf: float
    threshold: float
    iterations: int = 0
    symmetric_min_eigenvalue: Optional[float] = None
    diagnostic: str = ""


class UniquenessReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    starts: int
    distinct_solutions: List[SystemState]
    cluster_tol: float
    unique: bool
    converged: int = 0
    non_converged: int = 0
    extinct: int = 0
    cluster_sizes: List[int] = []
    cluster_start_indices: List[int] = []
    boundary_states: List[SystemState] = []
    inconclusive: bool = False
    verdict: str = ""


class ConditionEntry(BaseModel):
    id: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    applicable: bool = True
    location: Optional[List[float]] = None
    ratio: Optional[float] = None
    note: str = ""

    @classmethod
    def compare(cls, id: str, lhs: float, rhs: float, **extra) -> "ConditionEntry":
        margin = float(lhs) - float(rhs)
        return cls(id=id, lhs=float(lhs), rhs=float(rhs), margin=margin, passed=bool(margin > 0), **extra)

    @classmethod
    def inapplicable(cls, id: str, note: str) -> "ConditionEntry":
        return cls(id=id, lhs=0.0, rhs=0.0, margin=0.0, passed=False, applicable=False, note=note)


class ConditionReport(BaseModel):
    name: str
    entries: List[ConditionEntry] = []

    def entry(self, id: str) -> ConditionEntry:
        for entry in self.entries:
            if entry.id == id:
                return entry
        raise KeyError(id)

    @property
    def all_passed(self) -> bool:
        """True when every applicable entry passes."""
        return all(entry.passed for entry in self.entries if entry.applicable)

    def failures(self) -> List[ConditionEntry]:
        return [entry for entry in self.entries if entry.applicable and not entry.passed]


class SpeciesOffset(BaseModel):
    """Parameter tangent of one growth function; unused parameters stay at zero."""

    model_config = ConfigDict(frozen=True)

    da: float = 0.0
    db: float = 0.0
    ds: float = 0.0

    def scaled(self, factor: float) -> "SpeciesOffset":
        return SpeciesOffset(da=self.da * factor, db=self.db * factor, ds=self.ds * factor)


class PerturbationDirection(BaseModel):
    model_config = ConfigDict(frozen=True)

    direction_id: int
    offsets: Tuple[SpeciesOffset, ...]


class PerturbationCell(BaseModel):
    direction_id: int
    delta: float
    unique: Optional[bool]
    distance: Optional[float]
    converged: int
    clusters: int
    note: str = ""


class PerturbationReport(BaseModel):
    cells: List[PerturbationCell]
    deltas: List[float]
    n_directions: int
    n_starts: int
    seed: int
    exploratory: bool
    max_unique_delta: Optional[float] = None


class StageSignal(BaseModel):
    stage: str
    signal: str  # "pass", "fail", "inconclusive"
    reasoning: str
    details: Dict[str, Any] = {}


class RunConfig(BaseModel):
    command: Command
    spec_path: Optional[str] = None
    sample: Optional[str] = None
    out_dir: str = "outputs"
    seed: int = 0
    starts: Optional[int] = None
    tol_res: Optional[float] = None
    grid_n: Optional[int] = None
    method: SolveMethod = SolveMethod.HYBRID
    workers: Optional[int] = None
    deltas: Optional[List[float]] = None
    directions: Optional[int] = None
    plot: bool = False
    show_reasoning: bool = False
