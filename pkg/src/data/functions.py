"""
Growth functions h_i and interaction functions g_i.

Every bound used by the condition checkers is taken over the working range [0, U_max]
(growth) or the working box (interaction). Closed forms are used where the family
allows it; otherwise a dense scan whose largest consecutive jump is added as slack.
"""

from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect

from data.errors import InvalidArgumentError, NumericalFailureError, SpecViolationError
from data.models import Grid, GrowthFamily, InteractionFamily

DEFAULT_SCAN_SAMPLES = 10000
ROOT_TOL = 1e-12
ROOT_MATCH_TOL = 1e-10


@lru_cache(maxsize=256)
def _pchip(knots: Tuple[float, ...], samples: Tuple[float, ...]) -> PchipInterpolator:
    return PchipInterpolator(np.asarray(knots), np.asarray(samples), extrapolate=True)


def _scalar_or_array(result: np.ndarray):
    return float(result) if np.ndim(result) == 0 else result


def scan_extrema(fn, lo: float, hi: float, samples: int = DEFAULT_SCAN_SAMPLES) -> Tuple[float, float]:
    """Certified (lower, upper) bounds of fn on [lo, hi] from a dense scan plus jump slack."""
    points = np.linspace(lo, hi, samples)
    values = np.asarray(fn(points), dtype=float)
    slack = float(np.max(np.abs(np.diff(values)))) if values.size > 1 else 0.0
    return float(values.min()) - slack, float(values.max()) + slack


class GrowthFunction(BaseModel):
    """Strictly decreasing h on [0, working_max] with h(0) > 0 and a root inside the range.

    affine:     h(u) = a - b u
    saturating: h(u) = a - b tanh(u / s)
    tabulated:  h(u) = P(u) + a - b u, P the monotone cubic through (knots, samples)
    """

    model_config = ConfigDict(frozen=True)

    family: GrowthFamily
    working_max: float
    a: float = 0.0
    b: float = 0.0
    s: float = 1.0
    knots: Tuple[float, ...] = ()
    samples: Tuple[float, ...] = ()
    scan_samples: int = DEFAULT_SCAN_SAMPLES

    @model_validator(mode="after")
    def _check_invariants(self):
        if not np.isfinite(self.working_max) or self.working_max <= 0:
            raise SpecViolationError(f"working_max must be positive, got {self.working_max}")
        if not all(np.isfinite(p) for p in (self.a, self.b, self.s)):
            raise SpecViolationError("growth parameters must be finite")
        if self.family in (GrowthFamily.AFFINE, GrowthFamily.SATURATING) and self.b <= 0:
            raise SpecViolationError(f"{self.family.value} growth needs b > 0, got {self.b}")
        if self.family == GrowthFamily.SATURATING and self.s <= 0:
            raise SpecViolationError(f"saturating growth needs s > 0, got {self.s}")
        if self.family == GrowthFamily.TABULATED:
            self._check_table()
        if self.value(0.0) <= 0:
            raise SpecViolationError(f"h(0) must be positive, got {self.value(0.0)}")
        points = np.linspace(0.0, self.working_max, self.scan_samples)
        slopes = self.derivative(points)
        if np.any(slopes >= 0):
            worst = float(points[int(np.argmax(slopes))])
            raise SpecViolationError(f"h is not strictly decreasing on [0, {self.working_max}] (h'({worst:.6g}) >= 0)")
        if self.value(self.working_max) >= 0:
            raise SpecViolationError(f"h has no root in (0, {self.working_max}]: h(U_max) = {self.value(self.working_max):.6g}")
        return self

    def _check_table(self):
        knots, samples = np.asarray(self.knots), np.asarray(self.samples)
        if knots.size < 2 or knots.size != samples.size:
            raise SpecViolationError("tabulated growth needs at least two (knot, sample) pairs of equal length")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(samples))):
            raise SpecViolationError("tabulated growth samples must be finite")
        if np.any(np.diff(knots) <= 0):
            raise SpecViolationError("tabulated knots must be strictly increasing")
        if np.any(np.diff(samples) >= 0):
            raise SpecViolationError("tabulated samples must be strictly decreasing")
        if knots[0] > 0 or knots[-1] < self.working_max:
            raise SpecViolationError(f"tabulated knots must cover [0, {self.working_max}], got [{knots[0]}, {knots[-1]}]")

    def _clamp(self, u):
        return np.clip(np.asarray(u, dtype=float), 0.0, self.working_max)

    def value(self, u):
        x = self._clamp(u)
        if self.family == GrowthFamily.AFFINE:
            result = self.a - self.b * x
        elif self.family == GrowthFamily.SATURATING:
            result = self.a - self.b * np.tanh(x / self.s)
        else:
            result = _pchip(self.knots, self.samples)(x) + self.a - self.b * x
        return _scalar_or_array(result)

    def derivative(self, u):
        x = self._clamp(u)
        if self.family == GrowthFamily.AFFINE:
            result = np.full_like(x, -self.b)
        elif self.family == GrowthFamily.SATURATING:
            result = -(self.b / self.s) / np.cosh(x / self.s) ** 2
        else:
            result = _pchip(self.knots, self.samples).derivative()(x) - self.b
        return _scalar_or_array(result)


class InteractionFunction(BaseModel):
    """g(x) = Σ c_j x_j / (1 + d_j x_j) over the N-1 competitor slots (d ≡ 0 for linear)."""

    model_config = ConfigDict(frozen=True)

    family: InteractionFamily
    coefficients: Tuple[float, ...]
    saturation: Tuple[float, ...] = ()
    absent: Tuple[bool, ...] = ()
    working_box: Tuple[float, ...] = ()

    @model_validator(mode="after")
    def _check_invariants(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.size == 0 or not np.all(np.isfinite(c)) or np.any(c < 0):
            raise SpecViolationError(f"interaction coefficients must be finite and >= 0, got {self.coefficients}")
        if self.family == InteractionFamily.LINEAR and any(d != 0 for d in self.saturation):
            raise SpecViolationError("linear interaction takes no saturation constants")
        for name, extra in (("saturation", self.saturation), ("absent", self.absent), ("working_box", self.working_box)):
            if extra and len(extra) != c.size:
                raise SpecViolationError(f"{name} must have one entry per competitor slot ({c.size})")
        if any(d < 0 or not np.isfinite(d) for d in self.saturation):
            raise SpecViolationError("saturation constants must be >= 0")
        if any(bound <= 0 for bound in self.working_box):
            raise SpecViolationError("working box bounds must be positive")
        return self

    @property
    def slots(self) -> int:
        return len(self.coefficients)

    def _d(self) -> np.ndarray:
        return np.asarray(self.saturation, dtype=float) if self.saturation else np.zeros(self.slots)

    def is_absent(self, slot: int) -> bool:
        return bool(self.absent[slot]) if self.absent else False

    def box(self, slot: int) -> float:
        return self.working_box[slot] if self.working_box else np.inf

    def value(self, x):
        """x has shape (slots,) or (slots, M); returns a scalar or an M-vector."""
        x = np.asarray(x, dtype=float)
        c, d = np.asarray(self.coefficients), self._d()
        shape = (-1,) + (1,) * (x.ndim - 1)
        terms = c.reshape(shape) * x / (1.0 + d.reshape(shape) * x)
        return _scalar_or_array(terms.sum(axis=0))

    def partial(self, x, slot: int):
        x = np.asarray(x, dtype=float)
        d = self._d()[slot]
        return _scalar_or_array(self.coefficients[slot] / (1.0 + d * x[slot]) ** 2)


class SpeciesSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    h: GrowthFunction
    g: InteractionFunction
    k: float


class SystemSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid: Grid
    species: Tuple[SpeciesSpec, ...]

    @model_validator(mode="after")
    def _check_invariants(self):
        n = len(self.species)
        if n < 2:
            raise SpecViolationError(f"a system needs at least two species, got {n}")
        for index, sp in enumerate(self.species, start=1):
            if sp.g.slots != n - 1:
                raise SpecViolationError(f"species {index}: g has {sp.g.slots} competitor slots, expected {n - 1}")
            root = root_of_h(sp.h)
            if abs(root - sp.k) > ROOT_MATCH_TOL:
                raise SpecViolationError(f"species {index}: k={sp.k} does not match the root of h ({root})")
        return self

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def working_max(self) -> float:
        return max(sp.h.working_max for sp in self.species)

    def roots(self) -> np.ndarray:
        return np.array([sp.k for sp in self.species])


def eval_h(h: GrowthFunction, u):
    return h.value(u)


def eval_h_prime(h: GrowthFunction, u):
    return h.derivative(u)


def root_of_h(h: GrowthFunction) -> float:
    """Root of h in (0, U_max), closed form for affine, bisection otherwise."""
    if h.value(0.0) <= 0 or h.value(h.working_max) >= 0:
        raise SpecViolationError(f"h has no sign change on [0, {h.working_max}]")
    if h.family == GrowthFamily.AFFINE:
        return h.a / h.b
    root = bisect(h.value, 0.0, h.working_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(h.value(root)) > ROOT_TOL:
        raise NumericalFailureError("bisection did not isolate the root of h", residual=abs(h.value(root)))
    return float(root)


def natural_root(family: GrowthFamily, a: float, b: float, s: float = 1.0, knots: Sequence[float] = (), samples: Sequence[float] = ()) -> Optional[float]:
    """Root of h before a working range is fixed; None when h never changes sign."""
    if family == GrowthFamily.AFFINE:
        return a / b if a > 0 and b > 0 else None
    if family == GrowthFamily.SATURATING:
        return s * np.arctanh(a / b) if 0 < a < b and s > 0 else None
    knots_arr = np.asarray(knots, dtype=float)
    values = np.asarray(samples, dtype=float) + a - b * knots_arr
    crossings = np.nonzero((values[:-1] > 0) & (values[1:] <= 0))[0]
    if crossings.size == 0:
        return None
    i = int(crossings[0])
    return float(knots_arr[i] + values[i] * (knots_arr[i + 1] - knots_arr[i]) / (values[i] - values[i + 1]))


def sup_partial(g: InteractionFunction, slot: int) -> float:
    # each partial c/(1+d x)^2 is non-increasing in its own coordinate
    return float(g.coefficients[slot])


def inf_partial(g: InteractionFunction, slot: int) -> float:
    d = g._d()[slot]
    box = g.box(slot)
    if d == 0:
        return float(g.coefficients[slot])
    return float(g.coefficients[slot] / (1.0 + d * box) ** 2) if np.isfinite(box) else 0.0


def inf_neg_h_prime(h: GrowthFunction) -> float:
    if h.family == GrowthFamily.AFFINE:
        return float(h.b)
    lower, _ = scan_extrema(lambda u: -h.derivative(u), 0.0, h.working_max, h.scan_samples)
    return max(lower, 0.0)


def sup_h_prime(h: GrowthFunction) -> float:
    if h.family == GrowthFamily.AFFINE:
        return float(-h.b)
    _, upper = scan_extrema(h.derivative, 0.0, h.working_max, h.scan_samples)
    return upper


def competitors(i: int, n: int) -> List[int]:
    return [j for j in range(n) if j != i]


def slot_of(i: int, j: int) -> int:
    """Slot of species j among the competitors of species i (0-based)."""
    if i == j:
        raise InvalidArgumentError("a species is not its own competitor")
    return j if j < i else j - 1


def interaction_values(spec: SystemSpec, i: int, stacked: np.ndarray):
    """g_i evaluated node-wise on the other species' rows of a stacked (N, M) state."""
    return spec.species[i].g.value(np.asarray(stacked)[competitors(i, spec.n_species)])


def interaction_at_roots(spec: SystemSpec, i: int) -> float:
    """g_i(k_1, ..., k_{i-1}, k_{i+1}, ..., k_N)"""
    return float(spec.species[i].g.value(spec.roots()[competitors(i, spec.n_species)]))


def build_system_spec(grid: Grid, growths: Sequence[GrowthFunction], interactions: Sequence[InteractionFunction]) -> SystemSpec:
    """Assemble a SystemSpec, computing every k_i and filling empty working boxes with U_max."""
    if len(growths) != len(interactions):
        raise SpecViolationError("need one interaction function per growth function")
    working_max = max(h.working_max for h in growths)
    species = []
    for h, g in zip(growths, interactions):
        if not g.working_box:
            g = InteractionFunction(**{**g.model_dump(), "working_box": (working_max,) * g.slots})
        species.append(SpeciesSpec(h=h, g=g, k=root_of_h(h)))
    return SystemSpec(grid=grid, species=tuple(species))


def with_grid(spec: SystemSpec, grid: Grid) -> SystemSpec:
    return SystemSpec(grid=grid, species=spec.species)
