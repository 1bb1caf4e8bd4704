"""Reference Lagrange bases, affine element maps, and global dof enumeration.

Supported spaces: piecewise-linear functions on interval partitions (P1_1D,
reference element [0, 1]) and on triangulations (P1_2D), plus piecewise
quadratics on triangulations (P2_2D, vertex and edge-midpoint nodes).
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh1D, TriMesh

__all__ = [
    "FeSpaceTag",
    "P1_1D",
    "P1_2D",
    "P2_2D",
    "AffineMap",
    "DofMap",
    "FemField",
    "eval_ref_basis",
    "tabulate_basis",
    "affine_map",
    "build_dofmap",
    "eval_field",
    "eval_field_gradient",
    "interpolate",
]


@dataclass(frozen=True)
class FeSpaceTag:
    """Identifies a finite-element space kind.

    ``constrained=True`` marks the subspace whose boundary dofs are
    eliminated (used when Dirichlet conditions apply).
    """

    kind: str
    constrained: bool = False

    _N_LOCAL = {"P1_1D": 2, "P1_2D": 3, "P2_2D": 6}
    _DIM = {"P1_1D": 1, "P1_2D": 2, "P2_2D": 2}

    def __post_init__(self):
        if self.kind not in self._N_LOCAL:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @property
    def n_local_dofs(self) -> int:
        return self._N_LOCAL[self.kind]

    @property
    def dim(self) -> int:
        return self._DIM[self.kind]


P1_1D = FeSpaceTag("P1_1D")
P1_2D = FeSpaceTag("P1_2D")
P2_2D = FeSpaceTag("P2_2D")


def tabulate_basis(space: FeSpaceTag, ref_points: np.ndarray):
    """Evaluate all reference basis functions at the given reference points.

    Returns ``(values, gradients)`` with shapes (npts, ndofs) and
    (npts, ndofs, dim).  Local P2 dof order is (v0, v1, v2, e01, e12, e02);
    edge function e_ij is 4*lambda_i*lambda_j in barycentric coordinates.
    """
    pts = np.atleast_2d(np.asarray(ref_points, dtype=float))
    if space.kind == "P1_1D":
        t = pts[:, 0]
        vals = np.column_stack((1.0 - t, t))
        grads = np.broadcast_to(np.array([[[-1.0], [1.0]]]), (len(t), 2, 1)).copy()
        return vals, grads

    xi, eta = pts[:, 0], pts[:, 1]
    lam = np.column_stack((1.0 - xi - eta, xi, eta))  # barycentric
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

    if space.kind == "P1_2D":
        vals = lam
        grads = np.broadcast_to(dlam[None, :, :], (len(xi), 3, 2)).copy()
        return vals, grads

    # P2_2D
    n = len(xi)
    vals = np.empty((n, 6))
    grads = np.empty((n, 6, 2))
    for i in range(3):
        vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        grads[:, i, :] = (4.0 * lam[:, i] - 1.0)[:, None] * dlam[i]
    for k, (i, j) in enumerate(((0, 1), (1, 2), (0, 2))):
        vals[:, 3 + k] = 4.0 * lam[:, i] * lam[:, j]
        grads[:, 3 + k, :] = 4.0 * (lam[:, j, None] * dlam[i] + lam[:, i, None] * dlam[j])
    return vals, grads


def eval_ref_basis(space: FeSpaceTag, local_index: int, ref_point):
    """Value and reference gradient of one basis function at one point."""
    if not 0 <= local_index < space.n_local_dofs:
        raise IndexError(f"local dof index {local_index} out of range for {space.kind}")
    pt = np.atleast_1d(np.asarray(ref_point, dtype=float))
    vals, grads = tabulate_basis(space, pt[None, :])
    grad = grads[0, local_index]
    return float(vals[0, local_index]), (float(grad[0]) if space.dim == 1 else grad.copy())


@dataclass(frozen=True)
class AffineMap:
    """Affine map F(ref) = origin + J @ ref from the reference element.

    In 1D, ``jacobian`` is the element length h and ``inverse_transpose``
    is 1/h.  ``det`` is always positive for valid (CCW) elements.
    """

    origin: np.ndarray | float
    jacobian: np.ndarray | float
    det: float
    inverse_transpose: np.ndarray | float

    def map_point(self, ref):
        if np.isscalar(self.jacobian):
            return self.origin + self.jacobian * ref
        return self.origin + np.asarray(ref) @ np.asarray(self.jacobian).T

    def map_points(self, refs: np.ndarray) -> np.ndarray:
        if np.isscalar(self.jacobian):
            return self.origin + self.jacobian * refs
        return self.origin + refs @ np.asarray(self.jacobian).T


def affine_map(mesh, element_index: int) -> AffineMap:
    """Affine map of one element; rejects degenerate elements (det <= 0)."""
    if isinstance(mesh, Mesh1D):
        a, b = mesh.element(element_index)
        h = b - a
        if h <= 0:
            raise ValueError(f"degenerate 1D element {element_index}")
        return AffineMap(origin=a, jacobian=h, det=h, inverse_transpose=1.0 / h)

    tri = mesh.triangles[element_index]
    v0, v1, v2 = mesh.vertices[tri]
    jac = np.column_stack((v1 - v0, v2 - v0))
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    if det <= 0:
        raise ValueError(f"degenerate or clockwise triangle {element_index} (det {det:g})")
    inv = np.array([[jac[1, 1], -jac[1, 0]], [-jac[0, 1], jac[0, 0]]]) / det
    return AffineMap(origin=v0, jacobian=jac, det=det, inverse_transpose=inv)


@dataclass(frozen=True)
class DofMap:
    """Global degree-of-freedom enumeration for one space on one mesh.

    Vertex dofs come first in vertex order; P2 edge dofs follow in
    sorted-edge order, so a shared midpoint resolves to the same global
    index from both adjacent triangles.  ``boundary_dofs`` maps each
    boundary label to the sorted dof indices lying on edges of that label.
    """

    space: FeSpaceTag
    mesh: Mesh1D | TriMesh
    n_dofs: int
    element_dofs: np.ndarray
    boundary_dofs: dict
    dof_coords: np.ndarray

    def all_boundary_dofs(self) -> np.ndarray:
        if not self.boundary_dofs:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(list(self.boundary_dofs.values())))


def build_dofmap(mesh, space: FeSpaceTag) -> DofMap:
    """Enumerate global dofs deterministically for the given space."""
    if space.kind == "P1_1D":
        if not isinstance(mesh, Mesh1D):
            raise TypeError("P1_1D requires a Mesh1D")
        m = mesh.n_vertices
        element_dofs = np.column_stack((np.arange(m - 1), np.arange(1, m)))
        left, right = mesh.boundary_labels
        boundary = {left: np.array([0]), right: np.array([m - 1])}
        return DofMap(
            space=space,
            mesh=mesh,
            n_dofs=m,
            element_dofs=element_dofs,
            boundary_dofs=boundary,
            dof_coords=mesh.vertices.reshape(-1, 1).copy(),
        )

    if not isinstance(mesh, TriMesh):
        raise TypeError(f"{space.kind} requires a TriMesh")

    if space.kind == "P1_2D":
        boundary: dict = {}
        for a, b, label in mesh.boundary_edges:
            boundary.setdefault(int(label), set()).update((int(a), int(b)))
        boundary = {l: np.array(sorted(s)) for l, s in sorted(boundary.items())}
        return DofMap(
            space=space,
            mesh=mesh,
            n_dofs=mesh.n_vertices,
            element_dofs=mesh.triangles.copy(),
            boundary_dofs=boundary,
            dof_coords=mesh.vertices.copy(),
        )

    # P2_2D: vertex dofs, then one dof per unique edge midpoint
    nv = mesh.n_vertices
    edge_index = mesh.edge_index
    n_dofs = nv + len(mesh.edges)

    element_dofs = np.empty((mesh.n_triangles, 6), dtype=np.int64)
    element_dofs[:, :3] = mesh.triangles
    for e, (v0, v1, v2) in enumerate(mesh.triangles):
        for k, (a, b) in enumerate(((v0, v1), (v1, v2), (v0, v2))):
            key = (int(min(a, b)), int(max(a, b)))
            element_dofs[e, 3 + k] = nv + edge_index[key]

    coords = np.vstack((mesh.vertices, 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])))

    boundary = {}
    for a, b, label in mesh.boundary_edges:
        key = (int(min(a, b)), int(max(a, b)))
        dofs = boundary.setdefault(int(label), set())
        dofs.update((int(a), int(b), nv + edge_index[key]))
    boundary = {l: np.array(sorted(s)) for l, s in sorted(boundary.items())}

    return DofMap(
        space=space,
        mesh=mesh,
        n_dofs=n_dofs,
        element_dofs=element_dofs,
        boundary_dofs=boundary,
        dof_coords=coords,
    )


class FemField:
    """A finite-element function: a dof map plus one coefficient per dof."""

    def __init__(self, dofmap: DofMap, coefficients: np.ndarray):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (dofmap.n_dofs,):
            raise ValueError(
                f"coefficient vector has length {len(coefficients)}, expected {dofmap.n_dofs}"
            )
        self.dofmap = dofmap
        self.coefficients = coefficients

    @property
    def space(self) -> FeSpaceTag:
        return self.dofmap.space

    @property
    def mesh(self):
        return self.dofmap.mesh

    def copy(self) -> "FemField":
        return FemField(self.dofmap, self.coefficients.copy())


def interpolate(dofmap: DofMap, f) -> FemField:
    """Nodal interpolant of a spatial function: f(x) in 1D, f(x, y) in 2D."""
    coords = dofmap.dof_coords
    if np.isscalar(f) or isinstance(f, (int, float)):
        return FemField(dofmap, np.full(dofmap.n_dofs, float(f)))
    if dofmap.space.dim == 1:
        vals = np.array([f(float(x)) for (x,) in coords])
    else:
        vals = np.array([f(float(x), float(y)) for x, y in coords])
    return FemField(dofmap, vals)


def eval_field_at(field: FemField, element_index: int, ref_points: np.ndarray) -> np.ndarray:
    """Field values at several reference points of one element."""
    vals, _ = tabulate_basis(field.space, ref_points)
    return vals @ field.coefficients[field.dofmap.element_dofs[element_index]]


def eval_field_gradient_at(field: FemField, element_index: int, ref_points: np.ndarray) -> np.ndarray:
    """Physical-gradient values, shape (npts, dim), at reference points."""
    _, grads = tabulate_basis(field.space, ref_points)
    coeffs = field.coefficients[field.dofmap.element_dofs[element_index]]
    amap = affine_map(field.mesh, element_index)
    ref_grad = np.einsum("pkd,k->pd", grads, coeffs)
    if field.space.dim == 1:
        return ref_grad * amap.inverse_transpose
    return ref_grad @ np.asarray(amap.inverse_transpose).T


def eval_field(field: FemField, element_index: int, ref_point) -> float:
    """Field value at one reference point of one element."""
    pt = np.atleast_1d(np.asarray(ref_point, dtype=float))
    return float(eval_field_at(field, element_index, pt[None, :])[0])


def eval_field_gradient(field: FemField, element_index: int, ref_point):
    """Physical gradient at one reference point of one element."""
    pt = np.atleast_1d(np.asarray(ref_point, dtype=float))
    grad = eval_field_gradient_at(field, element_index, pt[None, :])[0]
    return float(grad[0]) if field.space.dim == 1 else grad
