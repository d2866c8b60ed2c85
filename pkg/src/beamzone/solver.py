"""Direct stiffness analysis of continuous beams with exact Timoshenko elements.

Sign conventions
----------------
* vertical displacement ``v`` positive upward, rotation positive anticlockwise;
* applied UDLs ``w`` positive downward (gravity);
* bending moment positive when sagging;
* shear force ``V = dM/dx``, so it is positive at the left end of a simply
  supported span under gravity load.

Every node carries a vertical support and is free to rotate. Forces come out in
the units of the applied loads (kN and kN.m for kN/m input) because only the
relative stiffness and the shear parameter enter the force distribution.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .model import BeamSystem, Material, ValidationError

N_STATIONS = 11
STATIONS = np.linspace(0.0, 1.0, N_STATIONS)


class SolverError(RuntimeError):
    pass


def shear_parameter(E: float, I: float, GAz: float, L: float) -> float:
    return 12.0 * E * I / (GAz * L * L)


def element_stiffness(E: float, I: float, GAz: float, L: float) -> np.ndarray:
    """Exact 2-node Timoshenko bending element, DOFs ``[v1, th1, v2, th2]``.

    ``GAz = np.inf`` gives the Euler-Bernoulli element.
    """
    if not (E > 0 and I > 0 and GAz > 0 and L > 0):
        raise ValueError("element_stiffness arguments must be positive")
    phi = 0.0 if np.isinf(GAz) else shear_parameter(E, I, GAz, L)
    c = E * I / ((1.0 + phi) * L ** 3)
    L2 = L * L
    return c * np.array([
        [12.0, 6.0 * L, -12.0, 6.0 * L],
        [6.0 * L, (4.0 + phi) * L2, -6.0 * L, (2.0 - phi) * L2],
        [-12.0, -6.0 * L, 12.0, -6.0 * L],
        [6.0 * L, (2.0 - phi) * L2, -6.0 * L, (4.0 + phi) * L2],
    ])


def fixed_end_forces(w, L: float, phi: float = 0.0) -> np.ndarray:
    """Clamped-clamped end reactions ``[V1, M1, V2, M2]`` for a downward UDL.

    For a uniform load the end moments are wL^2/12 whatever the shear
    parameter, so ``phi`` only exists for interface symmetry with the
    stiffness routine.
    """
    if not L > 0:
        raise ValueError("span must be positive")
    w = np.asarray(w, dtype=float)
    return np.stack([w * L / 2.0, w * L * L / 12.0, w * L / 2.0, -w * L * L / 12.0])


@dataclass(frozen=True)
class MeshSolution:
    x: np.ndarray             # node coordinates, (n_nodes,)
    displacements: np.ndarray  # (2 * n_nodes, n_cases)
    end_forces: np.ndarray     # (n_elem, 4, n_cases), forces from nodes onto element
    udl: np.ndarray            # (n_elem, n_cases)

    def element_forces(self, e: int, xi):
        """Moment and shear at local fractions ``xi`` of element ``e``.

        Returns arrays shaped ``(len(xi), n_cases)``.
        """
        L = self.x[e + 1] - self.x[e]
        s = np.atleast_1d(np.asarray(xi, dtype=float))[:, None] * L
        F = self.end_forces[e]
        w = self.udl[e][None, :]
        M = -F[1][None, :] + F[0][None, :] * s - 0.5 * w * s * s
        V = F[0][None, :] - w * s
        return M, V


def solve_mesh(x, EI, GAz, udl, supported, nodal_loads=None, E: float = 1.0,
               clamped=None) -> MeshSolution:
    """Linear static solve of a line mesh.

    Parameters
    ----------
    x : (n_nodes,) node abscissae, strictly increasing.
    EI, GAz : per-element bending and shear rigidities (GAz may be inf).
    udl : (n_elem,) or (n_elem, n_cases) downward UDL per element.
    supported : (n_nodes,) bool, vertical restraint flags.
    nodal_loads : optional (2 * n_nodes, n_cases) external nodal forces/moments
        in the DOF directions (upward force, anticlockwise moment).
    clamped : optional (n_nodes,) bool, rotational restraint flags.
    """
    x = np.asarray(x, dtype=float)
    EI = np.asarray(EI, dtype=float)
    GAz = np.asarray(GAz, dtype=float)
    udl = np.asarray(udl, dtype=float)
    if udl.ndim == 1:
        udl = udl[:, None]
    n_nodes = len(x)
    n_elem = n_nodes - 1
    n_cases = udl.shape[1]
    ndof = 2 * n_nodes

    K = np.zeros((ndof, ndof))
    F = np.zeros((ndof, n_cases))
    if nodal_loads is not None:
        F += np.asarray(nodal_loads, dtype=float).reshape(ndof, -1)
    fef = np.empty((n_elem, 4, n_cases))
    ks = []
    for e in range(n_elem):
        L = x[e + 1] - x[e]
        if not L > 0:
            raise ValidationError(f"element {e} has non-positive length")
        # E scaled out: element_stiffness only sees EI and the ratio EI/GAz
        k = element_stiffness(E, EI[e] / E, GAz[e], L)
        ks.append(k)
        dofs = slice(2 * e, 2 * e + 4)
        K[dofs, dofs] += k
        fef[e] = fixed_end_forces(udl[e], L)
        F[dofs] -= fef[e]

    free = np.ones(ndof, dtype=bool)
    free[0::2] = ~np.asarray(supported, dtype=bool)
    if clamped is not None:
        free[1::2] = ~np.asarray(clamped, dtype=bool)
    u = np.zeros((ndof, n_cases))
    Kff = K[np.ix_(free, free)]
    try:
        fac = cho_factor(Kff)
    except LinAlgError as exc:
        raise SolverError(f"singular stiffness matrix: {exc}") from None
    u[free] = cho_solve(fac, F[free])

    end = np.empty((n_elem, 4, n_cases))
    for e, k in enumerate(ks):
        end[e] = k @ u[2 * e:2 * e + 4] + fef[e]
    return MeshSolution(x=x, displacements=u, end_forces=end, udl=udl)


def _rigidities(system: BeamSystem, material: Material):
    if not system.has_sections:
        raise ValidationError("sections must be assigned before analysis")
    EI = np.array([material.elastic_modulus * s.second_moment_major for s in system.sections])
    GA = np.array([material.shear_modulus * s.shear_area_major for s in system.sections])
    return EI, GA


def _member_mesh(spans, subdivisions: int):
    spans = np.asarray(spans, dtype=float)
    nodes = np.concatenate([[0.0], np.cumsum(spans)])
    if subdivisions == 1:
        return nodes, np.ones(len(nodes), dtype=bool)
    pts = [0.0]
    for i, L in enumerate(spans):
        pts.extend(nodes[i] + L * np.arange(1, subdivisions + 1) / subdivisions)
    x = np.array(pts)
    supported = np.zeros(len(x), dtype=bool)
    supported[::subdivisions] = True
    return x, supported


@dataclass(frozen=True)
class Solution:
    """Result of :func:`solve`: per-member station forces for each load case."""

    mesh: MeshSolution
    subdivisions: int
    m: int

    def forces(self, member: int, xi=STATIONS):
        """``(M, V)`` at fractions ``xi`` of ``member``, each ``(len(xi), n_cases)``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        n = self.subdivisions
        pos = xi * n
        sub = np.minimum(np.floor(pos).astype(int), n - 1)
        local = pos - sub
        n_cases = self.mesh.udl.shape[1]
        M = np.empty((len(xi), n_cases))
        V = np.empty((len(xi), n_cases))
        for k, (j, t) in enumerate(zip(sub, local)):
            Mk, Vk = self.mesh.element_forces(member * n + j, [t])
            M[k], V[k] = Mk[0], Vk[0]
        return M, V

    def reactions(self) -> np.ndarray:
        """Upward support reactions, ``(m + 1, n_cases)``."""
        end = self.mesh.end_forces
        n = self.subdivisions
        R = np.zeros((self.m + 1, end.shape[2]))
        for i in range(self.m):
            R[i] += end[i * n, 0]
            R[i + 1] += end[i * n + n - 1, 2]
        return R


def solve(system: BeamSystem, per_member_udl, material: Material, subdivisions: int = 1) -> Solution:
    """Analyse ``system`` under one or more sets of member UDLs (kN/m).

    ``per_member_udl`` is ``(m,)`` or ``(m, n_cases)``.
    """
    EI, GA = _rigidities(system, material)
    w = np.asarray(per_member_udl, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    if w.shape[0] != system.m:
        raise ValidationError(f"expected {system.m} member loads, got {w.shape[0]}")
    x, supported = _member_mesh(system.spans, subdivisions)
    rep = lambda a: np.repeat(a, subdivisions, axis=0)
    mesh = solve_mesh(x, rep(EI), rep(GA), rep(w), supported, E=material.elastic_modulus)
    return Solution(mesh=mesh, subdivisions=subdivisions, m=system.m)


def unit_response_tensors(spans, EI, GA, E: float = 1.0):
    """Station forces of every member under a unit UDL on each member alone.

    Returns ``(M, V)`` each shaped ``(m, 11, m)``: ``M[d, s, i]`` is the moment
    at station ``s`` of member ``d`` due to 1 kN/m on member ``i`` only, i.e. the
    influence line of that station integrated over member ``i``.
    """
    spans = np.asarray(spans, dtype=float)
    m = len(spans)
    x, supported = _member_mesh(spans, 1)
    mesh = solve_mesh(x, EI, GA, np.eye(m), supported, E=E)
    s = (STATIONS[None, :] * spans[:, None])[:, :, None]        # (m, 11, 1)
    F = mesh.end_forces                                          # (m, 4, m)
    w = np.eye(m)[:, None, :]                                    # (m, 1, m)
    M = -F[:, 1][:, None, :] + F[:, 0][:, None, :] * s - 0.5 * w * s * s
    V = F[:, 0][:, None, :] - w * s
    return M, V


@dataclass(frozen=True)
class ResponseTable:
    design_beam: int
    moment_unit: np.ndarray  # (11, m)
    shear_unit: np.ndarray   # (11, m)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["station", "member", "M_unit", "V_unit"])
            for s in range(self.moment_unit.shape[0]):
                for i in range(self.moment_unit.shape[1]):
                    wr.writerow([s, i, repr(float(self.moment_unit[s, i])),
                                 repr(float(self.shear_unit[s, i]))])


def response_tables(system: BeamSystem, material: Material) -> list[ResponseTable]:
    EI, GA = _rigidities(system, material)
    M, V = unit_response_tensors(system.spans, EI, GA, E=material.elastic_modulus)
    return [ResponseTable(d, M[d], V[d]) for d in range(system.m)]


def response_table(system: BeamSystem, d: int, material: Material) -> ResponseTable:
    if not 0 <= d < system.m:
        raise IndexError(f"design beam {d} out of range")
    return response_tables(system, material)[d]


@dataclass(frozen=True)
class PolaritySequence:
    design_beam: int
    station: int
    signs: tuple[int, ...]
    quantity: str

    def arrangement(self, positive: bool = True) -> tuple[int, ...]:
        """Activation that maximises the positive (or negative) response."""
        want = 1 if positive else -1
        return tuple(1 if s == want else 0 for s in self.signs)


def polarity_sequence(table: ResponseTable, s: int, quantity: str = "moment",
                      rel_tol: float = 1e-10) -> PolaritySequence:
    if quantity == "moment":
        data = table.moment_unit
    elif quantity == "shear":
        data = table.shear_unit
    else:
        raise ValueError(f"unknown quantity {quantity!r}")
    row = data[s]
    tol = rel_tol * np.max(np.abs(data))
    signs = tuple(int(np.sign(v)) if abs(v) > tol else 0 for v in row)
    return PolaritySequence(table.design_beam, s, signs, quantity)
