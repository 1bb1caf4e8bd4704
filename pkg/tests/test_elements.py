import numpy as np
import pytest

from femkit.elements import (
    FemField,
    P1_1D,
    P1_2D,
    P2_2D,
    affine_map,
    build_dofmap,
    eval_field,
    eval_field_gradient,
    eval_ref_basis,
    interpolate,
    tabulate_basis,
)
from femkit.mesh import RectangleSpec, TriMesh, build_interval_mesh, build_structured_mesh


def random_reference_points(rng, n):
    """Uniform points in the open reference triangle."""
    pts = rng.uniform(0, 1, size=(n, 2))
    flip = pts.sum(axis=1) > 1
    pts[flip] = 1 - pts[flip][:, ::-1]
    return pts


class TestReferenceBasis:
    def test_p1_2d_values_at_corners(self):
        value, grad = eval_ref_basis(P1_2D, 0, (0.0, 0.0))
        assert value == 1.0
        assert np.allclose(grad, [-1.0, -1.0])
        value, _ = eval_ref_basis(P1_2D, 0, (1.0, 0.0))
        assert value == 0.0

    def test_p2_kronecker_delta(self):
        nodes = np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]], dtype=float)
        vals, _ = tabulate_basis(P2_2D, nodes)
        assert np.allclose(vals, np.eye(6), atol=1e-15)

    def test_p1_1d_reference_hat_functions(self):
        vals, grads = tabulate_basis(P1_1D, np.array([[0.25]]))
        assert np.allclose(vals, [[0.75, 0.25]])
        assert np.allclose(grads[0, :, 0], [-1.0, 1.0])

    @pytest.mark.parametrize("space", [P1_2D, P2_2D])
    def test_partition_of_unity(self, space):
        rng = np.random.default_rng(3)
        pts = random_reference_points(rng, 100)
        vals, grads = tabulate_basis(space, pts)
        assert np.abs(vals.sum(axis=1) - 1.0).max() < 1e-14
        assert np.abs(grads.sum(axis=1)).max() < 1e-14

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            eval_ref_basis(P1_2D, 3, (0.1, 0.1))


class TestAffineMap:
    def test_reference_triangle_is_identity(self, reference_triangle):
        amap = affine_map(reference_triangle, 0)
        assert np.allclose(amap.jacobian, np.eye(2))
        assert amap.det == 1.0

    def test_scaled_triangle(self):
        mesh = TriMesh(
            vertices=np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]),
            triangles=np.array([[0, 1, 2]]),
            boundary_edges=np.array([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
        )
        amap = affine_map(mesh, 0)
        assert amap.det == pytest.approx(4.0)  # area 2

    def test_1d_element_gradient_scale(self):
        mesh = build_interval_mesh(0.0, 1.0, 5)
        amap = affine_map(mesh, 1)  # element (1/5, 2/5)
        assert amap.det == pytest.approx(0.2, abs=1e-16)
        _, ref_grad = eval_ref_basis(P1_1D, 0, (0.5,))
        assert ref_grad * amap.inverse_transpose == pytest.approx(-5.0, abs=1e-12)

    def test_clockwise_triangle_rejected(self):
        mesh = TriMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            triangles=np.array([[0, 2, 1]]),
            boundary_edges=np.array([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
        )
        with pytest.raises(ValueError, match="degenerate|clockwise"):
            affine_map(mesh, 0)


class TestDofMap:
    def test_interval_p1(self):
        mesh = build_interval_mesh(0.0, 1.0, 5)
        dofmap = build_dofmap(mesh, P1_1D)
        assert dofmap.n_dofs == 6
        assert dofmap.boundary_dofs["left"].tolist() == [0]
        assert dofmap.boundary_dofs["right"].tolist() == [5]
        assert dofmap.element_dofs[2].tolist() == [2, 3]

    def test_single_triangle_p2(self, reference_triangle):
        dofmap = build_dofmap(reference_triangle, P2_2D)
        assert dofmap.n_dofs == 6

    def test_two_triangle_square_p2(self, unit_square_1):
        dofmap = build_dofmap(unit_square_1, P2_2D)
        assert dofmap.n_dofs == 4 + 5  # 4 vertices + 5 edges

    def test_p1_2d_counts(self, unit_square_2):
        dofmap = build_dofmap(unit_square_2, P1_2D)
        assert dofmap.n_dofs == unit_square_2.n_vertices
        assert dofmap.element_dofs.shape == (8, 3)

    def test_shared_edge_midpoint_has_one_dof(self, unit_square_1):
        dofmap = build_dofmap(unit_square_1, P2_2D)
        # the diagonal (0, 3) is shared; find its midpoint dof from both triangles
        tri_dofs = dofmap.element_dofs
        shared = set(tri_dofs[0]) & set(tri_dofs[1])
        mids = [d for d in shared if d >= unit_square_1.n_vertices]
        assert len(mids) == 1

    def test_boundary_dofs_carry_edge_labels(self, unit_square_2):
        dofmap = build_dofmap(unit_square_2, P2_2D)
        assert set(dofmap.boundary_dofs) == {1, 2, 3, 4}
        bottom = dofmap.boundary_dofs[1]
        coords = dofmap.dof_coords[bottom]
        assert np.allclose(coords[:, 1], 0.0)

    def test_dof_coords_midpoints(self, unit_square_1):
        dofmap = build_dofmap(unit_square_1, P2_2D)
        nv = unit_square_1.n_vertices
        edges = unit_square_1.edges
        expected = 0.5 * (unit_square_1.vertices[edges[:, 0]] + unit_square_1.vertices[edges[:, 1]])
        assert np.allclose(dofmap.dof_coords[nv:], expected)


class TestFieldEvaluation:
    def test_constant_field(self, unit_square_2):
        dofmap = build_dofmap(unit_square_2, P2_2D)
        field = FemField(dofmap, np.ones(dofmap.n_dofs))
        assert eval_field(field, 3, (0.3, 0.3)) == pytest.approx(1.0, abs=1e-15)
        grad = eval_field_gradient(field, 3, (0.3, 0.3))
        assert np.abs(grad).max() < 1e-14

    def test_p1_reproduces_linear(self, unit_square_2):
        dofmap = build_dofmap(unit_square_2, P1_2D)
        field = interpolate(dofmap, lambda x, y: x)
        centroid_ref = (1.0 / 3.0, 1.0 / 3.0)
        for e in range(unit_square_2.n_triangles):
            tri = unit_square_2.triangles[e]
            centroid_x = unit_square_2.vertices[tri][:, 0].mean()
            assert eval_field(field, e, centroid_ref) == pytest.approx(centroid_x, abs=1e-15)

    def test_p2_reproduces_quadratic(self, unit_square_2):
        dofmap = build_dofmap(unit_square_2, P2_2D)
        field = interpolate(dofmap, lambda x, y: x**2 + 0.5 * x * y - y**2)
        rng = np.random.default_rng(5)
        pts = random_reference_points(rng, 30)
        for e in range(unit_square_2.n_triangles):
            amap = affine_map(unit_square_2, e)
            phys = amap.map_points(pts)
            exact = phys[:, 0] ** 2 + 0.5 * phys[:, 0] * phys[:, 1] - phys[:, 1] ** 2
            for p, target in zip(pts, exact):
                assert eval_field(field, e, p) == pytest.approx(target, abs=1e-13)
            grad = eval_field_gradient(field, e, pts[0])
            expected = [2 * phys[0, 0] + 0.5 * phys[0, 1], 0.5 * phys[0, 0] - 2 * phys[0, 1]]
            assert np.allclose(grad, expected, atol=1e-12)

    def test_shared_midpoint_value_identical_from_both_sides(self, unit_square_1):
        dofmap = build_dofmap(unit_square_1, P2_2D)
        rng = np.random.default_rng(9)
        field = FemField(dofmap, rng.uniform(-1, 1, dofmap.n_dofs))
        # shared edge is the diagonal from vertex 0 to vertex 3; locate its
        # midpoint in reference coordinates of both triangles
        values = []
        for e in range(2):
            tri = unit_square_1.triangles[e]
            ref_corners = {int(v): np.array(r) for v, r in zip(tri, [(0, 0), (1, 0), (0, 1)])}
            mid_ref = 0.5 * (ref_corners[0] + ref_corners[3])
            values.append(eval_field(field, e, mid_ref))
        assert values[0] == values[1]

    def test_coefficient_length_checked(self, unit_square_1):
        dofmap = build_dofmap(unit_square_1, P1_2D)
        with pytest.raises(ValueError):
            FemField(dofmap, np.zeros(dofmap.n_dofs + 1))
