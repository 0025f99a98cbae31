"""
Coupled N-species system Δu_i + u_i (h_i(u_i) - g_i(u_{-i})) = 0.

States are handled internally as stacked (N, M) arrays; the public API speaks
SystemState. The Fréchet matrix uses the sign convention B = -∂r/∂u.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import bmat, diags
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh, spsolve, splu

from data.errors import InvalidArgumentError
from data.functions import SystemSpec, competitors, interaction_at_roots, interaction_values, scan_extrema, slot_of
from data.models import FrechetMatrix, GrowthFamily, InvertibilityReport, ScalarField, SolveMethod, SolveReport, SystemState, UniquenessReport
from data.settings import SolverSettings, resolve
from pde.grid import attainable_tolerance, residual_norm, stiffness_matrix
from pde.logistic import linearized_step, theta
from utils.progress import progress

MAX_HALVINGS = 30
BOUNDARY_FRACTION = 0.9
START_STREAM = 0
INVERSE_ITERATION_RTOL = 1e-10


def _check_state(spec: SystemSpec, state: SystemState):
    if state.grid != spec.grid:
        raise InvalidArgumentError("state does not live on the spec's grid")
    if len(state.fields) != spec.n_species:
        raise InvalidArgumentError(f"state has {len(state.fields)} species, spec has {spec.n_species}")


def stacked_residual(spec: SystemSpec, stacked: np.ndarray) -> np.ndarray:
    stiffness = stiffness_matrix(spec.grid)
    out = np.empty_like(stacked, dtype=float)
    for i, sp in enumerate(spec.species):
        u = stacked[i]
        out[i] = -(stiffness @ u) + u * (sp.h.value(u) - interaction_values(spec, i, stacked))
    return out


def residual(spec: SystemSpec, state: SystemState) -> List[ScalarField]:
    """r_i = Δ_h u_i + u_i (h_i(u_i) - g_i(u_{-i})) as one ScalarField per species."""
    _check_state(spec, state)
    return [ScalarField(grid=spec.grid, values=row) for row in stacked_residual(spec, state.stacked())]


def default_bounds(spec: SystemSpec, settings: SolverSettings | None = None) -> Tuple[SystemState, SystemState]:
    """θ_{h_i - g_i(k_{-i})} <= u_i <= θ_{h_i} for every coexistence state."""
    settings = resolve(settings)
    lower, upper = [], []
    for i, sp in enumerate(spec.species):
        upper.append(theta(spec.grid, sp.h, 0.0, settings).theta)
        shifted = theta(spec.grid, sp.h, interaction_at_roots(spec, i), settings)
        if not shifted.positive:
            progress.warn("bounds", f"species {i + 1}", "lower bound degenerates to 0 (shifted reproduction below λ₁)")
        lower.append(shifted.theta)
    return SystemState(fields=lower), SystemState(fields=upper)


def _frechet_blocks(spec: SystemSpec, stacked: np.ndarray) -> List[List]:
    stiffness = stiffness_matrix(spec.grid)
    n = spec.n_species
    blocks = [[None] * n for _ in range(n)]
    for i, sp in enumerate(spec.species):
        u = stacked[i]
        growth = sp.h.value(u) - interaction_values(spec, i, stacked)
        blocks[i][i] = (stiffness - diags(growth + u * sp.h.derivative(u))).tocsc()
        others = stacked[competitors(i, n)]
        for j in competitors(i, n):
            blocks[i][j] = diags(u * sp.g.partial(others, slot_of(i, j))).tocsc()
    return blocks


def assemble_frechet(spec: SystemSpec, state: SystemState) -> FrechetMatrix:
    _check_state(spec, state)
    return FrechetMatrix(blocks=_frechet_blocks(spec, state.stacked()), state=state)


def _step_cap(u: np.ndarray, delta: np.ndarray) -> float:
    """Largest s <= 1 with u + s·δ >= (1 - BOUNDARY_FRACTION)·u on every positive node."""
    shrinking = (delta < 0) & (u > 0)
    if not np.any(shrinking):
        return 1.0
    return float(min(1.0, np.min(BOUNDARY_FRACTION * u[shrinking] / -delta[shrinking])))


def _newton(spec: SystemSpec, start: np.ndarray, settings: SolverSettings) -> Tuple[np.ndarray, bool, int, str]:
    u = start.copy()
    raw = stacked_residual(spec, u)
    res = residual_norm(raw)
    for iteration in range(1, settings.newton_max_iter + 1):
        if res == 0.0:
            return u, True, iteration - 1, ""
        tol = attainable_tolerance(spec.grid, settings.tol_res, u)
        jacobian = bmat(_frechet_blocks(spec, u), format="csc")
        delta = spsolve(jacobian, raw.ravel()).reshape(u.shape)
        if not np.all(np.isfinite(delta)):
            return u, False, iteration, "singular Jacobian"
        if res <= tol and np.max(np.abs(delta)) <= tol * (1.0 + np.max(np.abs(u))):
            return np.maximum(u + delta, 0.0), True, iteration, ""

        # zero nodes stay zero; positive nodes never lose more than BOUNDARY_FRACTION per step
        step = _step_cap(u, delta)
        for _ in range(MAX_HALVINGS + 1):
            trial = np.maximum(u + step * delta, 0.0)
            trial_raw = stacked_residual(spec, trial)
            trial_res = residual_norm(trial_raw)
            if trial_res < res:
                break
            step /= 2
        else:
            return u, res <= tol, iteration, "line search stalled"
        u, raw, res = trial, trial_raw, trial_res
    return u, False, settings.newton_max_iter, "Newton iteration limit"


def _collapsed(start: np.ndarray, end: np.ndarray, extinction_tol: float) -> bool:
    """Some species positive at the start vanished identically."""
    return bool(np.any((np.max(start, axis=1) > extinction_tol) & (np.max(np.abs(end), axis=1) < extinction_tol)))


def picard_shifts(spec: SystemSpec, settings: SolverSettings | None = None) -> List[float]:
    """Per-species M_i >= sup |h_i + u h_i'| on [0, U_max] + sup g_i on the working box."""
    settings = resolve(settings)
    shifts = []
    for sp in spec.species:
        h = sp.h
        if h.family == GrowthFamily.AFFINE:
            bound = max(abs(h.a), abs(h.a - 2.0 * h.b * h.working_max))
        else:
            _, bound = scan_extrema(lambda u: np.abs(h.value(u) + u * h.derivative(u)), 0.0, h.working_max, settings.scan_samples)
        box = np.array([sp.g.box(slot) if np.isfinite(sp.g.box(slot)) else spec.working_max for slot in range(sp.g.slots)])
        shifts.append(float(bound + sp.g.value(box)))
    return shifts


def _picard_sweep(spec: SystemSpec, stacked: np.ndarray, shifts: List[float], settings: SolverSettings) -> np.ndarray:
    u = stacked.copy()
    for i, sp in enumerate(spec.species):
        reaction = sp.h.value(u[i]) - interaction_values(spec, i, u)
        u[i] = np.maximum(linearized_step(spec.grid, shifts[i], u[i], reaction, settings), 0.0)
    return u


def picard_sweep(spec: SystemSpec, state: SystemState, settings: SolverSettings | None = None) -> SystemState:
    """One cyclic Gauss–Seidel sweep over the species."""
    settings = resolve(settings)
    _check_state(spec, state)
    return SystemState.from_stacked(spec.grid, _picard_sweep(spec, state.stacked(), picard_shifts(spec, settings), settings))


def _picard(spec: SystemSpec, start: np.ndarray, settings: SolverSettings) -> Tuple[np.ndarray, bool, int, str]:
    shifts = picard_shifts(spec, settings)
    u = start.copy()
    for sweep in range(1, settings.picard_max_sweeps + 1):
        updated = _picard_sweep(spec, u, shifts, settings)
        increment = float(np.max(np.abs(updated - u)))
        u = updated
        tol = attainable_tolerance(spec.grid, settings.tol_res, u)
        if increment <= settings.tol_res * (1.0 + np.max(np.abs(u))) and residual_norm(stacked_residual(spec, u)) <= tol:
            return u, True, sweep, ""
    return u, False, settings.picard_max_sweeps, "Picard sweep limit"


def solve_system(
    spec: SystemSpec,
    initial: SystemState,
    method: SolveMethod = SolveMethod.HYBRID,
    settings: SolverSettings | None = None,
    bounds: Tuple[SystemState, SystemState] | None = None,
) -> SolveReport:
    """Solve from `initial`; `bounds` reuses a (lower, upper) pair from default_bounds."""
    settings = resolve(settings)
    _check_state(spec, initial)
    method = SolveMethod(method)
    start = initial.stacked()

    if method == SolveMethod.NEWTON:
        u, converged, iterations, note = _newton(spec, start, settings)
    elif method == SolveMethod.PICARD:
        u, converged, iterations, note = _picard(spec, start, settings)
    else:
        u, converged, iterations, note = _newton(spec, start, settings)
        if converged and _collapsed(start, u, settings.extinction_tol):
            converged = False
        if not converged:
            u, _, sweeps, _ = _picard(spec, start, settings)
            u, converged, polish_iterations, note = _newton(spec, u, settings)
            iterations += sweeps + polish_iterations

    res = residual_norm(stacked_residual(spec, u))
    tolerance = attainable_tolerance(spec.grid, settings.tol_res, u)
    converged = bool(converged and res <= tolerance)
    if tolerance > settings.tol_res and not note:
        note = f"tolerance raised to the roundoff floor {tolerance:.3e}"
    lower, upper = bounds if bounds is not None else default_bounds(spec, settings)
    excess = float(np.max(np.maximum(lower.stacked() - u, u - upper.stacked())))
    return SolveReport(
        state=SystemState.from_stacked(spec.grid, u),
        converged=converged,
        residual=res,
        tolerance=tolerance,
        iterations=iterations,
        within_bounds=bool(excess <= settings.bounds_slack),
        method=method,
        bounds_excess=max(excess, 0.0),
        note=note,
    )


def _symmetric_min_eigenvalue(matrix) -> float | None:
    symmetric = ((matrix + matrix.T) / 2).tocsc()
    diagonal = symmetric.diagonal()
    off_diagonal = np.asarray(abs(symmetric).sum(axis=1)).ravel() - np.abs(diagonal)
    sigma = float(np.min(diagonal - off_diagonal)) - 1.0
    try:
        values = eigsh(symmetric, k=1, sigma=sigma, which="LM", v0=np.ones(symmetric.shape[0]), return_eigenvectors=False)
    except (ArpackNoConvergence, ArpackError, RuntimeError):
        return None
    return float(values[0])


def check_invertibility(frechet: FrechetMatrix, settings: SolverSettings | None = None) -> InvertibilityReport:
    """σ_min of B by inverse iteration on BᵀB; invertible iff σ_min > rel_tol·‖B‖∞."""
    settings = resolve(settings)
    matrix = frechet.matrix()
    norm_inf = float(np.max(np.asarray(abs(matrix).sum(axis=1))))
    threshold = settings.invertibility_rel_tol * norm_inf
    symmetric_min = _symmetric_min_eigenvalue(matrix)

    def failed(diagnostic: str, iterations: int = 0) -> InvertibilityReport:
        return InvertibilityReport(invertible=False, sigma_min=0.0, norm_inf=norm_inf, threshold=threshold, iterations=iterations, symmetric_min_eigenvalue=symmetric_min, diagnostic=diagnostic)

    try:
        lu = splu(matrix)
    except RuntimeError as exc:
        return failed(f"LU factorization broke down: {exc}")

    x = np.ones(matrix.shape[0]) / np.sqrt(matrix.shape[0])
    previous, diagnostic = 0.0, ""
    for iteration in range(1, settings.invertibility_max_iter + 1):
        z = lu.solve(lu.solve(x), trans="T")
        amplification = float(np.linalg.norm(z))
        if not np.isfinite(amplification) or amplification == 0.0:
            return failed("inverse iteration breakdown", iteration)
        x = z / amplification
        if abs(amplification - previous) <= INVERSE_ITERATION_RTOL * amplification:
            break
        previous = amplification
    else:
        diagnostic = "inverse iteration did not converge"
    sigma_min = 1.0 / np.sqrt(amplification)
    return InvertibilityReport(
        invertible=bool(sigma_min > threshold),
        sigma_min=float(sigma_min),
        norm_inf=norm_inf,
        threshold=threshold,
        iterations=iteration,
        symmetric_min_eigenvalue=symmetric_min,
        diagnostic=diagnostic,
    )


def _start_states(spec: SystemSpec, n_starts: int, seed: int, bounds: Tuple[SystemState, SystemState]) -> List[np.ndarray]:
    lower, upper = bounds
    starts = [lower.stacked(), upper.stacked()]
    for index in range(2, n_starts):
        rng = np.random.default_rng([seed, START_STREAM, index])
        scale = 1.0 - rng.uniform(0.0, 0.95, spec.n_species)  # (0.05, 1]
        starts.append(scale[:, None] * upper.stacked())
    return starts


def _cluster(candidates: List[Tuple[int, np.ndarray]], tol: float) -> List[List[int]]:
    graph = nx.Graph()
    graph.add_nodes_from(index for index, _ in candidates)
    for a, (index_a, state_a) in enumerate(candidates):
        for index_b, state_b in candidates[a + 1:]:
            if np.max(np.abs(state_a - state_b)) <= tol:
                graph.add_edge(index_a, index_b)
    return sorted((sorted(component) for component in nx.connected_components(graph)), key=lambda component: component[0])


def multi_start_uniqueness(spec: SystemSpec, n_starts: int, seed: int, method: SolveMethod = SolveMethod.HYBRID, settings: SolverSettings | None = None) -> UniquenessReport:
    settings = resolve(settings)
    if n_starts < 2:
        raise InvalidArgumentError(f"need at least two starts, got {n_starts}")
    bounds = default_bounds(spec, settings)
    starts = _start_states(spec, n_starts, seed, bounds)

    def run(index: int) -> SolveReport:
        progress.update_status("multi-start", f"start {index + 1}/{n_starts}", "solving")
        return solve_system(spec, SystemState.from_stacked(spec.grid, starts[index]), method, settings, bounds)

    with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
        reports = list(pool.map(run, range(n_starts)))

    candidates, boundary_states = [], []
    non_converged = extinct = 0
    for index, report in enumerate(reports):
        if not report.converged:
            non_converged += 1
            continue
        stacked = report.state.stacked()
        if np.any(np.max(np.abs(stacked), axis=1) < settings.extinction_tol):
            extinct += 1
            boundary_states.append(report.state)
            continue
        candidates.append((index, stacked))

    clusters = _cluster(candidates, settings.cluster_tol)
    by_index = dict(candidates)
    distinct = [SystemState.from_stacked(spec.grid, by_index[cluster[0]]) for cluster in clusters]
    converged = n_starts - non_converged
    unique = len(clusters) == 1
    if converged == 0:
        verdict = f"inconclusive (no start converged, {n_starts} starts)"
    elif unique:
        verdict = f"empirically unique ({n_starts} starts)"
    elif not clusters:
        verdict = f"no coexistence state found ({n_starts} starts)"
    else:
        verdict = f"multiple coexistence states ({len(clusters)} clusters, {n_starts} starts)"
    if non_converged:
        progress.warn("multi-start", None, f"{non_converged} of {n_starts} starts did not converge")
    return UniquenessReport(
        starts=n_starts,
        distinct_solutions=distinct,
        cluster_tol=settings.cluster_tol,
        unique=unique,
        converged=converged,
        non_converged=non_converged,
        extinct=extinct,
        cluster_sizes=[len(cluster) for cluster in clusters],
        cluster_start_indices=[cluster[0] for cluster in clusters],
        boundary_states=boundary_states[:1],
        inconclusive=converged == 0,
        verdict=verdict,
    )
