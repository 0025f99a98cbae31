"""
Sufficient conditions for existence, uniqueness and invertibility, with numeric margins.

Every entry is lhs vs rhs with margin = lhs - rhs and passes iff margin > 0.
Entry ids: U1..U4, P1..P3 (hypotheses, worst species reported), T11B.i, T31A.i,
T33.i, T33L.i, C34A.i, C34B.i, C34T.i, T32.j, EIG0.i (species numbered from 1).
"""

from typing import List, Tuple

import numpy as np

from data.errors import UndefinedConstantError
from data.functions import SystemSpec, competitors, inf_neg_h_prime, inf_partial, interaction_at_roots, interaction_values, slot_of, sup_h_prime, sup_partial
from data.models import ConditionEntry, ConditionReport, GrowthFamily, SystemState
from data.settings import SolverSettings, resolve
from pde.logistic import theta
from pde.spectral import lambda1, lambda1_of
from utils.progress import progress

G_ZERO_TOL = 1e-14
C1_JUMP_TOL = 1e-6
KNOT_OFFSET = 1e-9
EIGEN_ZERO_TOL = 1e-6

# (lhs, rhs, note)
Candidate = Tuple[float, float, str]


def _worst(id: str, candidates: List[Candidate]) -> ConditionEntry:
    lhs, rhs, note = min(candidates, key=lambda c: c[0] - c[1])
    return ConditionEntry.compare(id, lhs, rhs, note=note)


def _h_monotone(spec: SystemSpec) -> List[Candidate]:
    return [(inf_neg_h_prime(sp.h), 0.0, f"species {i + 1}: inf(-h')") for i, sp in enumerate(spec.species)]


def _g_monotone(spec: SystemSpec) -> List[Candidate]:
    out = []
    for i, sp in enumerate(spec.species):
        for j in competitors(i, spec.n_species):
            slot = slot_of(i, j)
            if not sp.g.is_absent(slot):
                out.append((inf_partial(sp.g, slot), 0.0, f"species {i + 1}: inf(∂g/∂u_{j + 1})"))
    return out


def _g_at_zero(spec: SystemSpec) -> List[Candidate]:
    return [(G_ZERO_TOL, abs(float(sp.g.value(np.zeros(sp.g.slots)))), f"species {i + 1}: |g(0)|") for i, sp in enumerate(spec.species)]


def _derivative_jumps(spec: SystemSpec) -> List[Candidate]:
    """Jump of h' across the interior table knots relative to 1 + max|h'|; analytic families have none."""
    out = []
    for i, sp in enumerate(spec.species):
        h = sp.h
        knots = np.asarray([k for k in h.knots if 0.0 < k < h.working_max])
        if h.family != GrowthFamily.TABULATED or knots.size == 0:
            out.append((C1_JUMP_TOL, 0.0, f"species {i + 1}: {h.family.value} growth is analytic"))
            continue
        offset = KNOT_OFFSET * (1.0 + np.abs(knots))
        jump = float(np.max(np.abs(h.derivative(knots + offset) - h.derivative(knots - offset))))
        scale = 1.0 + float(np.max(np.abs(h.derivative(knots))))
        out.append((C1_JUMP_TOL, jump / scale, f"species {i + 1}: relative h' jump across table knots"))
    return out


def check_hypotheses(spec: SystemSpec, settings: SolverSettings | None = None) -> ConditionReport:
    """Structural hypotheses, one aggregated entry each, reporting the worst species."""
    settings = resolve(settings)
    lam = lambda1(spec.grid, settings)
    h_monotone, g_monotone, g_zero = _h_monotone(spec), _g_monotone(spec), _g_at_zero(spec)
    reproduction = [(float(sp.h.value(0.0)), lam, f"species {i + 1}: h(0) vs λ₁") for i, sp in enumerate(spec.species)]
    roots = [(float(sp.k), 0.0, f"species {i + 1}: k") for i, sp in enumerate(spec.species)]
    u4 = [(float(sp.h.value(0.0)), lam + interaction_at_roots(spec, i), f"species {i + 1}: h(0) vs λ₁ + g(k)") for i, sp in enumerate(spec.species)]

    entries = [
        _worst("U1", _derivative_jumps(spec)),
        _worst("U2", h_monotone + g_monotone),
        _worst("U3", g_zero),
        _worst("U4", u4),
        _worst("P1", h_monotone),
        _worst("P2", reproduction + g_monotone),
        _worst("P3", roots),
    ]
    return ConditionReport(name="hypotheses", entries=entries)


def compute_K(spec: SystemSpec, settings: SolverSettings | None = None) -> float:
    """sup over nodes and i != j of θ_{h_j} / θ_{h_i - g_i(k_{-i})}"""
    settings = resolve(settings)
    upper = [theta(spec.grid, sp.h, 0.0, settings) for sp in spec.species]
    best = -np.inf
    for i, sp in enumerate(spec.species):
        lower = theta(spec.grid, sp.h, interaction_at_roots(spec, i), settings)
        if not lower.positive:
            raise UndefinedConstantError(f"K undefined: lower-bound solution of species {i + 1} vanishes")
        for j in competitors(i, spec.n_species):
            best = max(best, float(np.max(upper[j].theta.values / lower.theta.values)))
    return best


def _thm11b_entries(spec: SystemSpec, k_constant: float, prefix: str) -> List[ConditionEntry]:
    entries = []
    for i, sp in enumerate(spec.species):
        rhs = 0.0
        for j in competitors(i, spec.n_species):
            rhs += sup_partial(sp.g, slot_of(i, j)) + k_constant * sup_partial(spec.species[j].g, slot_of(j, i))
        entries.append(ConditionEntry.compare(f"{prefix}.{i + 1}", -2.0 * sup_h_prime(sp.h), rhs, note=f"K={k_constant:.6g}"))
    return entries


def check_thm11B(spec: SystemSpec, settings: SolverSettings | None = None) -> ConditionReport:
    """-2 sup h_i' > Σ_{j≠i} (sup ∂g_i/∂u_j + K sup ∂g_j/∂u_i)"""
    return ConditionReport(name="uniqueness inequality", entries=_thm11b_entries(spec, compute_K(spec, settings), "T11B"))


def _competition_potential(spec: SystemSpec, i: int, settings: SolverSettings) -> np.ndarray:
    thetas = np.vstack([theta(spec.grid, sp.h, 0.0, settings).theta.values for sp in spec.species])
    return interaction_values(spec, i, thetas)


def check_thm31A(spec: SystemSpec, settings: SolverSettings | None = None) -> ConditionReport:
    """h_i(0) > λ₁(g_i(θ_{h_1}, ..., θ_{h_N} without i))"""
    settings = resolve(settings)
    positive = [theta(spec.grid, sp.h, 0.0, settings).positive for sp in spec.species]
    entries = []
    for i, sp in enumerate(spec.species):
        missing = [j + 1 for j in competitors(i, spec.n_species) if not positive[j]]
        if missing:
            entries.append(ConditionEntry.inapplicable(f"T31A.{i + 1}", f"θ_h of species {missing} vanishes"))
            continue
        lam = lambda1_of(spec.grid, _competition_potential(spec, i, settings), settings)
        entries.append(ConditionEntry.compare(f"T31A.{i + 1}", float(sp.h.value(0.0)), lam))
    return ConditionReport(name="persistence (reproduction vs competition eigenvalue)", entries=entries)


def _pointwise_entry(id: str, spec: SystemSpec, lhs: np.ndarray, rhs: np.ndarray) -> ConditionEntry:
    margins = lhs - rhs
    worst = int(np.argmin(margins))
    loaded = rhs > 0
    ratio = float(np.min(lhs[loaded] / rhs[loaded])) if np.any(loaded) else None
    location = [float(c) for c in spec.grid.node_coordinates()[worst]]
    return ConditionEntry.compare(id, float(lhs[worst]), float(rhs[worst]), location=location, ratio=ratio)


def check_thm33_pointwise(spec: SystemSpec, state: SystemState) -> ConditionReport:
    """2 inf(-h_i') u_i > Σ_{j≠i} (sup ∂g_i/∂u_j u_i + sup ∂g_j/∂u_i u_j) at every interior node."""
    stacked = state.stacked()
    entries = []
    for i, sp in enumerate(spec.species):
        u = stacked[i]
        rhs = np.zeros_like(u)
        for j in competitors(i, spec.n_species):
            rhs += sup_partial(sp.g, slot_of(i, j)) * u + sup_partial(spec.species[j].g, slot_of(j, i)) * stacked[j]
        entries.append(_pointwise_entry(f"T33.{i + 1}", spec, 2.0 * inf_neg_h_prime(sp.h) * u, rhs))
    return ConditionReport(name="Fréchet invertibility (pointwise)", entries=entries)


def check_thm33_local(spec: SystemSpec, state: SystemState) -> ConditionReport:
    """-u_i h_i'(u_i) > Σ_{j≠i} (u_i ∂g_i/∂u_j + u_j ∂g_j/∂u_i) / 2 with derivatives at the state."""
    stacked = state.stacked()
    n = spec.n_species
    entries = []
    for i, sp in enumerate(spec.species):
        u = stacked[i]
        rhs = np.zeros_like(u)
        for j in competitors(i, n):
            partner = spec.species[j].g
            rhs += 0.5 * u * sp.g.partial(stacked[competitors(i, n)], slot_of(i, j))
            rhs += 0.5 * stacked[j] * partner.partial(stacked[competitors(j, n)], slot_of(j, i))
        entries.append(_pointwise_entry(f"T33L.{i + 1}", spec, -u * sp.h.derivative(u), rhs))
    return ConditionReport(name="Fréchet invertibility (local)", entries=entries)


def check_cor34(spec: SystemSpec, settings: SolverSettings | None = None) -> ConditionReport:
    """(A) h_i(0) > λ₁ + g_i(k_{-i}) and (B) the uniqueness inequality with K."""
    settings = resolve(settings)
    lam = lambda1(spec.grid, settings)
    entries = [ConditionEntry.compare(f"C34A.{i + 1}", float(sp.h.value(0.0)), lam + interaction_at_roots(spec, i)) for i, sp in enumerate(spec.species)]
    try:
        entries += _thm11b_entries(spec, compute_K(spec, settings), "C34B")
    except UndefinedConstantError as exc:
        progress.warn("conditions", None, str(exc))
        entries += [ConditionEntry(id=f"C34B.{i + 1}", lhs=0.0, rhs=0.0, margin=0.0, passed=False, note=str(exc)) for i in range(spec.n_species)]
    return ConditionReport(name="combined existence and uniqueness", entries=entries)


def check_cor34_chain(spec: SystemSpec, settings: SolverSettings | None = None) -> ConditionReport:
    """λ₁ + g_i(k_{-i}) > λ₁(g_i(θ_{h_{-i}})), the step from (A) to the persistence condition."""
    settings = resolve(settings)
    lam = lambda1(spec.grid, settings)
    entries = []
    for i in range(spec.n_species):
        potential = lambda1_of(spec.grid, _competition_potential(spec, i, settings), settings)
        entries.append(ConditionEntry.compare(f"C34T.{i + 1}", lam + interaction_at_roots(spec, i), potential))
    return ConditionReport(name="eigenvalue comparison chain", entries=entries)


def extinction_diagnostic(spec: SystemSpec, state: SystemState, settings: SolverSettings | None = None) -> ConditionReport:
    """For extinct j: lhs = λ₁(g_j(θ_{h_{-j}})), rhs = h_j(0); margin > 0 means h_j(0) <= λ₁ holds."""
    settings = resolve(settings)
    norms = np.max(np.abs(state.stacked()), axis=1)
    extinct = [j for j in range(spec.n_species) if norms[j] < settings.extinction_tol]
    if not extinct:
        return ConditionReport(name="extinction diagnostic", entries=[ConditionEntry.inapplicable("T32", "no extinct species")])
    entries = []
    for j in extinct:
        lam = lambda1_of(spec.grid, _competition_potential(spec, j, settings), settings)
        h0 = float(spec.species[j].h.value(0.0))
        entries.append(ConditionEntry.compare(f"T32.{j + 1}", lam, h0, note=f"reproduction excess h(0) - λ₁ = {h0 - lam:.6g}"))
    return ConditionReport(name="extinction diagnostic", entries=entries)


def check_linearized_eigen(spec: SystemSpec, state: SystemState, settings: SolverSettings | None = None) -> ConditionReport:
    """At a coexistence state, λ₁(g_i(u_{-i}) - h_i(u_i)) = 0 since u_i is its positive eigenfunction."""
    settings = resolve(settings)
    stacked = state.stacked()
    entries = []
    for i, sp in enumerate(spec.species):
        potential = interaction_values(spec, i, stacked) - sp.h.value(stacked[i])
        lam = lambda1_of(spec.grid, potential, settings)
        tolerance = EIGEN_ZERO_TOL * (1.0 + float(np.max(np.abs(potential))))
        entries.append(ConditionEntry.compare(f"EIG0.{i + 1}", tolerance, abs(lam), note=f"λ₁={lam:.3e}"))
    return ConditionReport(name="linearized eigenvalue at the state", entries=entries)
