"""Stabilized Taylor-Hood solver for the stationary Stokes equations.

Velocity components live in P2, pressure in P1.  The assembled block system
(unknowns ordered [u1 dofs | u2 dofs | p dofs]) is

    [ A    0    B0^T ] [u1]   [F1]
    [ 0    A    B1^T ] [u2] = [F2]
    [ B0   B1  -eps*M] [ p]   [ 0]

with A the viscosity-scaled P2 stiffness (gradient inner product, one
uncoupled Laplacian per component), B_c the negative pairing of the c-th
velocity derivative with the pressure test functions, and a small -eps
pressure mass block that fixes the pressure constant.  Dirichlet velocity
data is applied by reduction and lifting; "do-nothing" labels contribute
nothing.  The pressure is post-normalized to zero mean.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    Divergence,
    Mass,
    Stiffness,
    assemble_bilinear,
    assemble_load,
    field_integral,
    reduce_system,
)
from .elements import (
    DofMap,
    FemField,
    P1_2D,
    P2_2D,
    build_dofmap,
    eval_field_at,
    eval_field_gradient_at,
    tabulate_basis,
)
from .linalg import LuFactorization, SolveReport, SparseMatrix
from .mesh import TriMesh
from .quadrature import gauss3_interval, triangle_rule

__all__ = [
    "StokesProblem",
    "StokesSystem",
    "StokesSolution",
    "assemble_stokes",
    "solve_stokes",
    "divergence_l2",
    "boundary_flux",
]


@dataclass
class StokesProblem:
    """Stationary Stokes problem on a labeled triangulation.

    ``dirichlet`` maps a boundary label to a velocity pair (constants or
    callables ``g(x, y, t)``, evaluated at t = 0); ``neumann`` labels get
    the natural zero-traction condition of the weak form.  Every mesh label
    must be classified exactly once.  Nonzero traction data is unsupported.
    """

    mesh: TriMesh
    mu: float
    body_force: tuple = (0.0, 0.0)
    dirichlet: dict = field(default_factory=dict)
    neumann: tuple = ()
    eps: float = 1e-8

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("viscosity mu must be positive")
        if self.eps < 0:
            raise ValueError("stabilization eps must be non-negative")
        mesh_labels = set(self.mesh.boundary_labels)
        dirichlet_labels = set(self.dirichlet)
        neumann_labels = set(self.neumann)
        if dirichlet_labels & neumann_labels:
            raise ValueError(f"labels classified twice: {sorted(dirichlet_labels & neumann_labels)}")
        classified = dirichlet_labels | neumann_labels
        if classified != mesh_labels:
            raise ValueError(
                f"boundary labels {sorted(mesh_labels)} must each be classified once, got {sorted(classified)}"
            )


@dataclass
class StokesSystem:
    """Assembled block system with the dof maps describing its layout."""

    matrix: SparseMatrix
    rhs: np.ndarray
    velocity_dofmap: DofMap
    pressure_dofmap: DofMap

    @property
    def n_velocity(self) -> int:
        return self.velocity_dofmap.n_dofs

    @property
    def size(self) -> int:
        return 2 * self.n_velocity + self.pressure_dofmap.n_dofs


@dataclass
class StokesSolution:
    velocity: tuple[FemField, FemField]
    pressure: FemField
    report: SolveReport
    divergence: float


def assemble_stokes(problem: StokesProblem) -> StokesSystem:
    """Assemble the symmetric stabilized block system for a Stokes problem."""
    mesh = problem.mesh
    v_map = build_dofmap(mesh, P2_2D)
    p_map = build_dofmap(mesh, P1_2D)
    n2, n1 = v_map.n_dofs, p_map.n_dofs

    a_visc = assemble_bilinear(mesh, Stiffness(problem.mu), v_map)
    b0 = assemble_bilinear(mesh, Divergence(0), trial_space=v_map, test_space=p_map)
    b1 = assemble_bilinear(mesh, Divergence(1), trial_space=v_map, test_space=p_map)
    m_p = assemble_bilinear(mesh, Mass(), p_map)

    K = SparseMatrix(2 * n2 + n1, 2 * n2 + n1)
    K.add_matrix(a_visc, 0, 0)
    K.add_matrix(a_visc, n2, n2)
    K.add_matrix(b0, 2 * n2, 0, scale=-1.0)
    K.add_matrix(b1, 2 * n2, n2, scale=-1.0)
    K.add_matrix(b0.transpose(), 0, 2 * n2, scale=-1.0)
    K.add_matrix(b1.transpose(), n2, 2 * n2, scale=-1.0)
    if problem.eps != 0.0:
        K.add_matrix(m_p, 2 * n2, 2 * n2, scale=-problem.eps)
    K.finalize()

    rhs = np.zeros(2 * n2 + n1)
    f1, f2 = problem.body_force
    rhs[:n2] = assemble_load(mesh, f1, v_map)
    rhs[n2 : 2 * n2] = assemble_load(mesh, f2, v_map)

    return StokesSystem(matrix=K, rhs=rhs, velocity_dofmap=v_map, pressure_dofmap=p_map)


def solve_stokes(problem: StokesProblem) -> StokesSolution:
    """Solve the Stokes problem by LU on the reduced block system.

    Requires at least one Dirichlet label (otherwise the velocity is only
    determined up to rigid motions).  The returned pressure has zero
    area-weighted mean.
    """
    if not problem.dirichlet:
        raise ValueError("Stokes needs at least one Dirichlet boundary label")

    system = assemble_stokes(problem)
    v_map, p_map = system.velocity_dofmap, system.pressure_dofmap
    n2 = system.n_velocity

    # Velocity Dirichlet values on the composite index set; when labels
    # share a corner dof the first-listed label wins.
    constrained: dict[int, float] = {}
    for label, (g1, g2) in problem.dirichlet.items():
        if label not in v_map.boundary_dofs:
            raise ValueError(f"boundary label {label!r} has no dofs on this mesh")
        for dof in v_map.boundary_dofs[label]:
            dof = int(dof)
            if dof in constrained:
                continue
            x, y = v_map.dof_coords[dof]
            constrained[dof] = float(g1(x, y, 0.0)) if callable(g1) else float(g1)
            constrained[n2 + dof] = float(g2(x, y, 0.0)) if callable(g2) else float(g2)

    reduced = reduce_system(system.matrix, system.rhs, constrained)
    lu = LuFactorization(reduced.matrix)
    interior_solution = lu.solve(reduced.rhs)
    full = reduced.reconstruct(interior_solution)

    u1 = FemField(v_map, full[:n2])
    u2 = FemField(v_map, full[n2 : 2 * n2])
    pressure = FemField(p_map, full[2 * n2 :])

    area = float(np.sum(problem.mesh.signed_areas()))
    pressure.coefficients -= field_integral(pressure) / area

    residual = float(np.linalg.norm(reduced.rhs - reduced.matrix.matvec(interior_solution)))
    div_norm = divergence_l2(u1, u2)
    report = SolveReport(method="lu", iterations=0, residual=residual, size=system.size)
    return StokesSolution(velocity=(u1, u2), pressure=pressure, report=report, divergence=div_norm)


def divergence_l2(u1: FemField, u2: FemField) -> float:
    """L2 norm of the divergence of a P2 velocity pair."""
    mesh = u1.mesh
    rule = triangle_rule(5)
    total = 0.0
    for e in range(mesh.n_triangles):
        g1 = eval_field_gradient_at(u1, e, rule.points)
        g2 = eval_field_gradient_at(u2, e, rule.points)
        div = g1[:, 0] + g2[:, 1]
        tri = mesh.triangles[e]
        v = mesh.vertices[tri]
        det = (v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1])
        total += float((rule.weights * det) @ (div * div))
    return math.sqrt(total)


def boundary_flux(velocity: tuple[FemField, FemField], label) -> float:
    """Outward flux of the velocity through the edges carrying ``label``.

    The outward unit normal is derived from the owning triangle's CCW
    orientation, so it is independent of the stored edge direction.
    """
    u1, u2 = velocity
    mesh = u1.mesh
    labels = set(int(l) for l in mesh.boundary_edges[:, 2])
    if int(label) not in labels:
        raise ValueError(f"unknown boundary label {label}")

    rule = gauss3_interval()
    s = 0.5 * (rule.points + 1.0)
    w = 0.5 * rule.weights
    ref_verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    directed = {}
    for e, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            directed[(int(a), int(b))] = e

    total = 0.0
    for a, b, lab in mesh.boundary_edges:
        if int(lab) != int(label):
            continue
        a, b = int(a), int(b)
        if (a, b) in directed:
            e = directed[(a, b)]
        elif (b, a) in directed:
            a, b = b, a
            e = directed[(a, b)]
        else:
            raise ValueError(f"boundary edge ({a}, {b}) is not an edge of any triangle")
        tri = mesh.triangles[e]
        la = int(np.nonzero(tri == a)[0][0])
        lb = int(np.nonzero(tri == b)[0][0])
        refs = ref_verts[la][None, :] * (1.0 - s)[:, None] + ref_verts[lb][None, :] * s[:, None]
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        tangent = pb - pa
        length = float(np.linalg.norm(tangent))
        normal = np.array([tangent[1], -tangent[0]]) / length
        un = eval_field_at(u1, e, refs) * normal[0] + eval_field_at(u2, e, refs) * normal[1]
        total += float((w * length) @ un)
    return total
