"""ULS cross-section checks and minimum-depth sizing of continuous beams."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .arrangements import ArrangementSet, naive_set, shear_susceptible
from .model import (BeamSystem, LoadCombination, Material, SectionCatalog, SteelSection,
                    ValidationError)
from .solver import STATIONS, unit_response_tensors

log = logging.getLogger(__name__)

MAX_ITERATIONS = 20
BRUTE_FORCE_LIMIT = 12
TIE_TOL = 1e-12


class DesignError(RuntimeError):
    pass


class InfeasibleDesign(DesignError):
    def __init__(self, member: int, utilisation: float):
        super().__init__(f"member {member}: largest catalog section still at u = {utilisation:.3f}")
        self.member = member
        self.utilisation = utilisation


class NonConvergence(DesignError):
    pass


@dataclass(frozen=True)
class Resistances:
    moment_resistance: float  # kN.m
    shear_resistance: float   # kN


def resistances(section: SteelSection, material: Material, gamma_m0: float = 1.0) -> Resistances:
    """Plastic bending and shear resistance of a class 1/2 section."""
    fy = material.yield_strength / gamma_m0
    return Resistances(
        moment_resistance=section.plastic_modulus_major * fy / 1e3,
        shear_resistance=section.shear_area_major * fy / math.sqrt(3.0) / 1e3,
    )


def utilisation(M, V, moment_resistance, shear_resistance=None):
    """Governing ratio of the bending, shear and bending-shear checks.

    Above half the plastic shear resistance the moment resistance is reduced
    by ``1 - rho`` with ``rho = (2 |V| / V_Rd - 1)^2``. Works elementwise on
    broadcastable arrays; a section whose shear resistance is exhausted has
    infinite bending utilisation under any non-zero moment.
    """
    if isinstance(moment_resistance, Resistances):
        moment_resistance, shear_resistance = (moment_resistance.moment_resistance,
                                               moment_resistance.shear_resistance)
    aM = np.abs(M)
    v = np.abs(V) / shear_resistance
    rho = np.where(v > 0.5, (2.0 * v - 1.0) ** 2, 0.0)
    cap = moment_resistance * (1.0 - rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        bend = np.where(cap > 0, aM / np.where(cap > 0, cap, 1.0), np.where(aM > 0, np.inf, 0.0))
    u = np.maximum(bend, v)
    return float(u) if np.ndim(u) == 0 else u


def arrangement_matrix(arrangements: ArrangementSet | Sequence) -> np.ndarray:
    """Activation factors as an ``(m, p)`` float array."""
    return np.asarray([tuple(a) for a in arrangements], dtype=float).T


def factored_loads(system: BeamSystem, combo: LoadCombination, activation: np.ndarray,
                   self_weight: Optional[Sequence[float]] = None) -> np.ndarray:
    """Design UDLs ``(m, p)`` in kN/m for every arrangement column."""
    sw = np.asarray(system.self_weights() if self_weight is None else self_weight)
    g = combo.gamma_permanent * (np.asarray(system.permanent_udl) + sw)
    q = combo.gamma_variable * np.asarray(system.variable_udl)
    return g[:, None] + q[:, None] * activation


def response_tensors(system: BeamSystem, material: Material):
    EI = np.array([material.elastic_modulus * s.second_moment_major for s in system.sections])
    GA = np.array([material.shear_modulus * s.shear_area_major for s in system.sections])
    return unit_response_tensors(system.spans, EI, GA, E=material.elastic_modulus)


def window_forces(Mt_d: np.ndarray, Vt_d: np.ndarray, loads: np.ndarray, mask=None):
    """Station forces of one beam from a subset of members.

    ``Mt_d``/``Vt_d`` are ``(11, m)`` unit responses, ``loads`` is ``(m, p)``;
    ``mask`` (m,) zeroes excluded members. Returns ``(11, p)`` arrays.
    """
    if mask is None:
        mask = np.ones(Mt_d.shape[1])
    return (Mt_d * mask) @ loads, (Vt_d * mask) @ loads


def system_utilisations(system: BeamSystem, material: Material, combo: LoadCombination,
                        activation: np.ndarray, tensors=None):
    """Per member and arrangement, the station-max utilisation.

    Returns ``(u, station)`` both shaped ``(m, p)``.
    """
    Mt, Vt = response_tensors(system, material) if tensors is None else tensors
    loads = factored_loads(system, combo, activation)
    u = np.empty((system.m, activation.shape[1]))
    st = np.empty((system.m, activation.shape[1]), dtype=int)
    for d, sec in enumerate(system.sections):
        r = resistances(sec, material)
        M, V = window_forces(Mt[d], Vt[d], loads)
        ud = utilisation(M, V, r.moment_resistance, r.shear_resistance)
        st[d] = np.argmax(ud, axis=0)
        u[d] = np.max(ud, axis=0)
    return u, st


def _pareto(M: np.ndarray, V: np.ndarray):
    """Non-dominated (|M|, |V|) demand pairs; utilisation is monotone in both."""
    aM = np.abs(M).ravel()
    aV = np.abs(V).ravel()
    order = np.lexsort((-aV, -aM))
    v = aV[order]
    prev = np.maximum.accumulate(np.concatenate([[-1.0], v[:-1]]))
    keep = order[v > prev]
    return aM[keep], aV[keep]


@dataclass(frozen=True)
class DesignResult:
    system: BeamSystem                 # with final sections assigned
    arrangements: ArrangementSet
    utilisation: tuple[float, ...]     # u_true per member
    governing_arrangement: tuple[int, ...]
    governing_station: tuple[int, ...]
    iterations: int

    @property
    def sections(self):
        return self.system.sections

    def to_json(self) -> dict:
        return {
            "members": [
                {
                    "designation": s.designation,
                    "u_true": u,
                    "governing_arrangement": "".join(map(str, self.arrangements[j])),
                    "governing_station": int(st),
                }
                for s, u, j, st in zip(self.system.sections, self.utilisation,
                                       self.governing_arrangement, self.governing_station)
            ],
            "iterations": self.iterations,
        }


def _select(system, catalog, material, combo, activation, current):
    """One analyse-select pass; returns new catalog indices and per-member u."""
    sections = [catalog[k] for k in current]
    sized = system.with_sections(sections)
    Mt, Vt = response_tensors(sized, material)
    loads = factored_loads(sized, combo, activation)
    Mrd = np.array([resistances(s, material).moment_resistance for s in catalog])[:, None]
    Vrd = np.array([resistances(s, material).shear_resistance for s in catalog])[:, None]
    chosen = []
    for d in range(system.m):
        M, V = window_forces(Mt[d], Vt[d], loads)
        aM, aV = _pareto(M, V)
        u = utilisation(aM[None, :], aV[None, :], Mrd, Vrd).max(axis=1)
        ok = np.flatnonzero(u <= 1.0)
        if not len(ok):
            raise InfeasibleDesign(d, float(u[-1]))
        chosen.append(int(ok[0]))
    return chosen


def _finalise(system, catalog, material, combo, arrangements, activation, idx, iterations):
    sized = system.with_sections([catalog[k] for k in idx])
    u, st = system_utilisations(sized, material, combo, activation)
    j = np.argmax(u, axis=1)
    rows = np.arange(system.m)
    return DesignResult(
        system=sized,
        arrangements=arrangements,
        utilisation=tuple(float(x) for x in u[rows, j]),
        governing_arrangement=tuple(int(x) for x in j),
        governing_station=tuple(int(x) for x in st[rows, j]),
        iterations=iterations,
    )


def design_system(system: BeamSystem, catalog: SectionCatalog, material: Material,
                  combo: LoadCombination, arrangements: ArrangementSet,
                  max_iterations: int = MAX_ITERATIONS) -> DesignResult:
    """Assign each member the shallowest catalog section that passes.

    The whole system is re-analysed after every selection pass, because the
    new sections change both self-weight and the distribution of moments.
    Iteration stops when the assignment repeats.
    """
    if not len(arrangements):
        raise ValidationError("arrangement set is empty")
    activation = arrangement_matrix(arrangements)
    if activation.shape[0] != system.m:
        raise ValidationError("arrangement length does not match member count")
    current = [0] * system.m
    history = [current]
    for it in range(1, max_iterations + 1):
        new = _select(system, catalog, material, combo, activation, current)
        if new == current:
            new = _step_down(system, catalog, material, combo, activation, new)
            return _finalise(system, catalog, material, combo, arrangements, activation, new, it)
        if new in history:
            cycle = history[history.index(new):]
            pick = _resolve_cycle(system, catalog, material, combo, activation, cycle)
            if pick is not None:
                log.debug("assignment cycle of length %d resolved to heaviest feasible", len(cycle))
                pick = _step_down(system, catalog, material, combo, activation, pick)
                return _finalise(system, catalog, material, combo, arrangements, activation, pick, it)
            new = [max(col) for col in zip(*cycle)]
        history.append(new)
        current = new
    raise NonConvergence(f"section assignment did not settle in {max_iterations} iterations")


def _feasible(system, catalog, material, combo, activation, idx) -> bool:
    sized = system.with_sections([catalog[k] for k in idx])
    u, _ = system_utilisations(sized, material, combo, activation)
    return bool(np.all(u <= 1.0))


def _step_down(system, catalog, material, combo, activation, idx):
    """Shrink members one catalog step at a time while the system stays feasible.

    The selection pass judges candidates under the current stiffness
    distribution; a shallower member attracts less moment once the system is
    re-analysed, so the fixed point can leave a member one or more steps too
    deep. Members are visited in order and the sweep repeats until no single
    step down survives a full re-analysis.
    """
    idx = list(idx)
    changed = True
    while changed:
        changed = False
        for d in range(system.m):
            while idx[d] > 0:
                trial = idx[:d] + [idx[d] - 1] + idx[d + 1:]
                if not _feasible(system, catalog, material, combo, activation, trial):
                    break
                idx = trial
                changed = True
    return idx


def _resolve_cycle(system, catalog, material, combo, activation, cycle):
    feasible = []
    for idx in cycle:
        sized = system.with_sections([catalog[k] for k in idx])
        u, _ = system_utilisations(sized, material, combo, activation)
        if np.all(u.max(axis=1) <= 1.0):
            feasible.append((sum(catalog[k].mass_per_length * L for k, L in zip(idx, system.spans)), idx))
    if not feasible:
        return None
    return max(feasible)[1]


@dataclass(frozen=True)
class BruteForceResult:
    naive: ArrangementSet
    winner: tuple[int, ...]          # index into ``naive`` per member
    utilisation: tuple[float, ...]   # winning station-max utilisation per member


def brute_force_critical(system: BeamSystem, material: Material, combo: LoadCombination,
                         catalog: Optional[SectionCatalog] = None,
                         naive: Optional[ArrangementSet] = None) -> BruteForceResult:
    """Scan all 2^m arrangements for each member's worst case.

    Arrangements within a relative ``TIE_TOL`` of the maximum count as tied
    and the lowest index wins, so the naive ordering (flexural, shear, rest)
    decides ties in favour of the explicit sets.
    """
    m = system.m
    if m > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to m <= {BRUTE_FORCE_LIMIT}")
    if naive is None:
        beams = shear_susceptible(system, material, catalog) if catalog is not None else ()
        naive = naive_set(m, beams)
    u, _ = system_utilisations(system, material, combo, arrangement_matrix(naive))
    best = u.max(axis=1)
    winner = tuple(int(np.flatnonzero(u[d] >= best[d] * (1.0 - TIE_TOL))[0]) for d in range(m))
    return BruteForceResult(naive, winner, tuple(float(b) for b in best))
