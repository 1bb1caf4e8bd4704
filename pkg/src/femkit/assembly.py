"""Element-local bilinear forms, global assembly, and Dirichlet reduction.

Local matrices are computed by quadrature on the reference element and
scattered additively into a triplet-buffered sparse matrix, so the global
matrix is the sum of restricted local contributions.  Inhomogeneous
Dirichlet data is handled by lifting: the boundary values are collected in
a vector x_d, the right-hand side is corrected to b - A x_d, and the system
is restricted to the interior dofs.

Coefficient and data callables take ``(x, t)`` on 1D meshes and
``(x, y, t)`` on triangulations, operate on numpy arrays, and may instead
be plain numbers or :class:`~femkit.elements.FemField` objects (evaluated
at quadrature points).
"""

from dataclasses import dataclass, field

import numpy as np

from .elements import (
    DofMap,
    FemField,
    FeSpaceTag,
    P1_1D,
    affine_map,
    build_dofmap,
    eval_field_at,
    tabulate_basis,
)
from .linalg import SparseMatrix
from .mesh import Mesh1D, TriMesh
from .quadrature import gauss3_interval, triangle_rule

__all__ = [
    "Stiffness",
    "Mass",
    "Convection",
    "Divergence",
    "LinearSystem",
    "DirichletBc",
    "ReducedSystem",
    "local_matrix",
    "scatter_add",
    "assemble_bilinear",
    "assemble_load",
    "assemble_neumann",
    "apply_dirichlet",
    "reduce_system",
    "field_integral",
    "field_l2_norm",
]


@dataclass(frozen=True)
class Stiffness:
    """Diffusion form: integral of kappa * grad(trial) . grad(test)."""

    kappa: object = 1.0


@dataclass(frozen=True)
class Mass:
    """L2 pairing: integral of trial * test."""


@dataclass(frozen=True)
class Convection:
    """Transport form: integral of (beta . grad(trial)) * test.

    Rows index the test function, columns the differentiated trial
    function.  ``beta`` is a scalar coefficient in 1D and a pair of
    coefficients (constants, callables, or FemFields) in 2D.
    """

    beta: object


@dataclass(frozen=True)
class Divergence:
    """Mixed form: integral of d(trial)/d(x_component) * test.

    Used per velocity component for the Stokes pressure blocks; the trial
    space is the velocity space, the test space the pressure space.
    """

    component: int

    def __post_init__(self):
        if self.component not in (0, 1):
            raise ValueError("divergence component must be 0 or 1")


@dataclass
class LinearSystem:
    """A sparse matrix with its right-hand side and optional dof maps."""

    matrix: SparseMatrix
    rhs: np.ndarray
    row_dofmap: DofMap | None = None
    col_dofmap: DofMap | None = None


@dataclass(frozen=True)
class DirichletBc:
    """Prescribed boundary values per label.

    ``values`` maps a boundary label to a constant or to a callable
    ``g(x, t)`` / ``g(x, y, t)``.  When a dof lies on edges of several
    listed labels, the label listed first wins.
    """

    values: dict

    def value_at(self, label, coord, t: float) -> float:
        g = self.values[label]
        if callable(g):
            return float(g(*coord, t))
        return float(g)


@dataclass
class ReducedSystem:
    """Interior system after Dirichlet elimination, plus the lifting vector."""

    matrix: SparseMatrix
    rhs: np.ndarray
    interior: np.ndarray
    lifting: np.ndarray

    def reconstruct(self, interior_solution: np.ndarray) -> np.ndarray:
        """Scatter an interior solution back into a full-length vector."""
        full = self.lifting.copy()
        full[self.interior] = interior_solution
        return full


# ---------------------------------------------------------------------------
# Quadrature/tabulation context shared by the assembly loops


class _SpaceData:
    def __init__(self, space: FeSpaceTag, ref_points: np.ndarray):
        self.space = space
        self.vals, self.ref_grads = tabulate_basis(space, ref_points)


class _AssemblyContext:
    """Reference-rule points/weights and tabulated bases for one mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        if isinstance(mesh, Mesh1D):
            rule = gauss3_interval()
            # move the rule from [-1, 1] to the [0, 1] reference element
            self.ref_points = (0.5 * (rule.points + 1.0)).reshape(-1, 1)
            self.weights = 0.5 * rule.weights
            self.dim = 1
            self.n_elements = mesh.n_elements
        elif isinstance(mesh, TriMesh):
            rule = triangle_rule(5)
            self.ref_points = rule.points
            self.weights = rule.weights
            self.dim = 2
            self.n_elements = mesh.n_triangles
        else:
            raise TypeError(f"unsupported mesh type {type(mesh).__name__}")
        self._spaces: dict[FeSpaceTag, _SpaceData] = {}

    def space_data(self, space: FeSpaceTag) -> _SpaceData:
        if space not in self._spaces:
            if space.dim != self.dim:
                raise ValueError(f"space {space.kind} does not match mesh dimension")
            self._spaces[space] = _SpaceData(space, self.ref_points)
        return self._spaces[space]

    def element_geometry(self, e: int):
        """Return (det, phys_points, inv_transpose) for element e."""
        amap = affine_map(self.mesh, e)
        phys = amap.map_points(self.ref_points)
        return amap.det, phys, amap.inverse_transpose

    def phys_grads(self, data: _SpaceData, inv_t):
        if self.dim == 1:
            return data.ref_grads * inv_t
        return data.ref_grads @ np.asarray(inv_t).T


def _as_dofmap(mesh, space_or_dofmap) -> DofMap:
    if isinstance(space_or_dofmap, DofMap):
        if space_or_dofmap.mesh is not mesh:
            raise ValueError("dof map belongs to a different mesh")
        return space_or_dofmap
    return build_dofmap(mesh, space_or_dofmap)


def _eval_scalar_coef(coef, ctx: _AssemblyContext, e: int, phys: np.ndarray, t: float) -> np.ndarray:
    """Coefficient values at the quadrature points of element e."""
    nq = len(ctx.weights)
    if isinstance(coef, FemField):
        if coef.mesh is not ctx.mesh:
            raise ValueError("coefficient field lives on a different mesh")
        return eval_field_at(coef, e, ctx.ref_points)
    if callable(coef):
        if ctx.dim == 1:
            out = coef(phys[:, 0], t)
        else:
            out = coef(phys[:, 0], phys[:, 1], t)
        return np.broadcast_to(np.asarray(out, dtype=float), (nq,)).copy()
    return np.full(nq, float(coef))


def _eval_vector_coef(beta, ctx: _AssemblyContext, e: int, phys: np.ndarray, t: float) -> np.ndarray:
    """Advection field at quadrature points, shape (nq, dim)."""
    if ctx.dim == 1:
        return _eval_scalar_coef(beta, ctx, e, phys, t).reshape(-1, 1)
    if not (isinstance(beta, (tuple, list)) and len(beta) == 2):
        raise ValueError("2D advection coefficient must be a (beta_x, beta_y) pair")
    bx = _eval_scalar_coef(beta[0], ctx, e, phys, t)
    by = _eval_scalar_coef(beta[1], ctx, e, phys, t)
    return np.column_stack((bx, by))


def _local_kernel(form, ctx, e, trial_data, test_data, t):
    det, phys, inv_t = ctx.element_geometry(e)
    wdet = ctx.weights * det

    if isinstance(form, Stiffness):
        kappa = _eval_scalar_coef(form.kappa, ctx, e, phys, t)
        tg = ctx.phys_grads(test_data, inv_t)
        rg = ctx.phys_grads(trial_data, inv_t)
        return np.einsum("q,qad,qbd->ab", wdet * kappa, tg, rg)

    if isinstance(form, Mass):
        return np.einsum("q,qa,qb->ab", wdet, test_data.vals, trial_data.vals)

    if isinstance(form, Convection):
        beta = _eval_vector_coef(form.beta, ctx, e, phys, t)
        rg = ctx.phys_grads(trial_data, inv_t)
        bdotg = np.einsum("qd,qbd->qb", beta, rg)
        return np.einsum("q,qa,qb->ab", wdet, test_data.vals, bdotg)

    if isinstance(form, Divergence):
        rg = ctx.phys_grads(trial_data, inv_t)
        return np.einsum("q,qa,qb->ab", wdet, test_data.vals, rg[:, :, form.component])

    raise TypeError(f"unknown form {form!r}")


def local_matrix(mesh, element: int, form, trial_space, test_space=None, t: float = 0.0) -> np.ndarray:
    """Dense local matrix of ``form`` on one element.

    Entry (a, b) pairs test function a with trial function b; coefficients
    are evaluated at the quadrature points.
    """
    ctx = _AssemblyContext(mesh)
    trial = ctx.space_data(trial_space if isinstance(trial_space, FeSpaceTag) else trial_space.space)
    test = trial if test_space is None else ctx.space_data(
        test_space if isinstance(test_space, FeSpaceTag) else test_space.space
    )
    return _local_kernel(form, ctx, element, trial, test, t)


def scatter_add(matrix: SparseMatrix, local: np.ndarray, row_dofs, col_dofs=None) -> None:
    """Additively scatter a local matrix: A[rows[a], cols[b]] += local[a, b]."""
    if col_dofs is None:
        col_dofs = row_dofs
    matrix.add_block(row_dofs, col_dofs, local)


def assemble_bilinear(mesh, form, trial_space, test_space=None, t: float = 0.0) -> SparseMatrix:
    """Assemble the global matrix of a bilinear form (n_test x n_trial).

    ``trial_space``/``test_space`` may be :class:`FeSpaceTag` objects or
    prebuilt :class:`DofMap` objects.  The result is independent of element
    visit order up to floating-point commutativity.
    """
    trial_map = _as_dofmap(mesh, trial_space)
    test_map = trial_map if test_space is None else _as_dofmap(mesh, test_space)

    ctx = _AssemblyContext(mesh)
    trial_data = ctx.space_data(trial_map.space)
    test_data = ctx.space_data(test_map.space)

    matrix = SparseMatrix(test_map.n_dofs, trial_map.n_dofs)
    for e in range(ctx.n_elements):
        local = _local_kernel(form, ctx, e, trial_data, test_data, t)
        scatter_add(matrix, local, test_map.element_dofs[e], trial_map.element_dofs[e])
    return matrix.finalize()


def assemble_load(mesh, f, test_space, t: float = 0.0) -> np.ndarray:
    """Assemble the load vector b_a = integral of f * test_a at time t."""
    test_map = _as_dofmap(mesh, test_space)
    ctx = _AssemblyContext(mesh)
    test_data = ctx.space_data(test_map.space)

    b = np.zeros(test_map.n_dofs)
    for e in range(ctx.n_elements):
        det, phys, _ = ctx.element_geometry(e)
        fvals = _eval_scalar_coef(f, ctx, e, phys, t)
        local = (ctx.weights * det * fvals) @ test_data.vals
        np.add.at(b, test_map.element_dofs[e], local)
    return b


def _boundary_edge_traces(mesh: TriMesh):
    """For each boundary edge: owner triangle and the two local vertex indices."""
    owners = {}
    for e, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            owners.setdefault((int(min(a, b)), int(max(a, b))), []).append((e, int(a), int(b)))
    return owners


def assemble_neumann(mesh, label, h, test_space, t: float = 0.0) -> np.ndarray:
    """Boundary load from flux data h on the edges carrying ``label``.

    Integrates h * test along each labeled edge with the interval Gauss
    rule mapped onto the edge.  On a 1D mesh the contribution is the point
    value at the labeled endpoint.
    """
    test_map = _as_dofmap(mesh, test_space)
    b = np.zeros(test_map.n_dofs)

    if isinstance(mesh, Mesh1D):
        if label not in mesh.boundary_labels:
            raise ValueError(f"unknown boundary label {label!r}")
        dof = 0 if label == mesh.boundary_labels[0] else test_map.n_dofs - 1
        x = float(mesh.vertices[0] if dof == 0 else mesh.vertices[-1])
        b[dof] = h(x, t) if callable(h) else float(h)
        return b

    labels = set(int(l) for l in mesh.boundary_edges[:, 2])
    if int(label) not in labels:
        raise ValueError(f"unknown boundary label {label}")

    rule = gauss3_interval()
    s = 0.5 * (rule.points + 1.0)  # edge parameter on [0, 1]
    w = 0.5 * rule.weights
    ref_verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    owners = _boundary_edge_traces(mesh)

    for a, bv, lab in mesh.boundary_edges:
        if int(lab) != int(label):
            continue
        key = (int(min(a, bv)), int(max(a, bv)))
        tri_e, ta, tb = owners[key][0]
        tri = mesh.triangles[tri_e]
        la = int(np.nonzero(tri == ta)[0][0])
        lb = int(np.nonzero(tri == tb)[0][0])
        refs = ref_verts[la][None, :] * (1.0 - s)[:, None] + ref_verts[lb][None, :] * s[:, None]
        vals, _ = tabulate_basis(test_map.space, refs)
        pa, pb = mesh.vertices[ta], mesh.vertices[tb]
        length = float(np.linalg.norm(pb - pa))
        phys = pa[None, :] * (1.0 - s)[:, None] + pb[None, :] * s[:, None]
        if callable(h):
            hv = np.broadcast_to(np.asarray(h(phys[:, 0], phys[:, 1], t), dtype=float), (len(s),))
        else:
            hv = np.full(len(s), float(h))
        np.add.at(b, test_map.element_dofs[tri_e], (w * length * hv) @ vals)
    return b


def dirichlet_values(bc, dofmap: DofMap, t: float = 0.0) -> dict[int, float]:
    """Prescribed value for each constrained dof; first-listed label wins.

    Raises if a label has no boundary dofs on the mesh.
    """
    if not isinstance(bc, DirichletBc):
        bc = DirichletBc(dict(bc))
    constrained: dict[int, float] = {}
    for label in bc.values:
        if label not in dofmap.boundary_dofs:
            raise ValueError(f"boundary label {label!r} has no dofs on this mesh")
        for dof in dofmap.boundary_dofs[label]:
            dof = int(dof)
            if dof not in constrained:
                constrained[dof] = bc.value_at(label, dofmap.dof_coords[dof], t)
    return constrained


def reduce_system(matrix: SparseMatrix, rhs: np.ndarray, constrained: dict[int, float]) -> ReducedSystem:
    """Eliminate constrained dofs by lifting: solve A_ii x_i = (b - A x_d)_i."""
    n = matrix.shape[0]
    lifting = np.zeros(n)
    for dof, value in constrained.items():
        lifting[dof] = value
    mask = np.ones(n, dtype=bool)
    if constrained:
        mask[np.fromiter(constrained.keys(), dtype=np.int64)] = False
    interior = np.nonzero(mask)[0]
    corrected = np.asarray(rhs, dtype=float) - matrix.matvec(lifting)
    return ReducedSystem(
        matrix=matrix.submatrix(interior, interior),
        rhs=corrected[interior],
        interior=interior,
        lifting=lifting,
    )


def apply_dirichlet(system: LinearSystem, bc, dofmap: DofMap, t: float = 0.0) -> ReducedSystem:
    """Apply Dirichlet data (possibly time-dependent) by reduction and lifting."""
    return reduce_system(system.matrix, system.rhs, dirichlet_values(bc, dofmap, t))


# ---------------------------------------------------------------------------
# Field functionals


def field_integral(field: FemField) -> float:
    """Integral of a finite-element function over the whole mesh."""
    ctx = _AssemblyContext(field.mesh)
    total = 0.0
    for e in range(ctx.n_elements):
        det, _, _ = ctx.element_geometry(e)
        total += float((ctx.weights * det) @ eval_field_at(field, e, ctx.ref_points))
    return total


def field_l2_norm(field: FemField) -> float:
    """L2 norm of a finite-element function."""
    ctx = _AssemblyContext(field.mesh)
    total = 0.0
    for e in range(ctx.n_elements):
        det, _, _ = ctx.element_geometry(e)
        vals = eval_field_at(field, e, ctx.ref_points)
        total += float((ctx.weights * det) @ (vals * vals))
    return float(np.sqrt(total))
