import math

import numpy as np
import pytest

from femkit.mesh import (
    DikeSpec,
    DiskSpec,
    IntervalSpec,
    MeshFormatError,
    RectangleSpec,
    TriMesh,
    build_interval_mesh,
    build_structured_mesh,
    mesh_metrics,
    read_mesh,
    validate_conformity,
    write_mesh,
)


def hanging_node_mesh():
    """Three triangles where vertex 3 sits in the interior of edge (0, 1)."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, 0.0], [0.5, -1.0]])
    triangles = np.array([[0, 1, 2], [0, 4, 3], [4, 1, 3]])
    boundary = np.array(
        [[0, 4, 1], [4, 1, 1], [1, 2, 1], [2, 0, 1], [0, 3, 1], [3, 1, 1]]
    )
    return TriMesh(vertices=vertices, triangles=triangles, boundary_edges=boundary)


class TestIntervalMesh:
    def test_uniform_six_vertices(self):
        mesh = build_interval_mesh(0.0, 1.0, 5)
        assert np.allclose(mesh.vertices, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], atol=1e-16)
        assert mesh.n_elements == 5

    def test_minimal_partition(self):
        mesh = build_interval_mesh(0.0, 1.0, 1)
        assert mesh.n_vertices == 2 and mesh.n_elements == 1

    def test_fine_partition(self):
        mesh = build_interval_mesh(0.0, 1.0, 200)
        assert mesh.n_vertices == 201
        assert np.diff(mesh.vertices).max() == pytest.approx(0.005, abs=1e-17)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            build_interval_mesh(1.0, 0.0, 5)
        with pytest.raises(ValueError):
            build_interval_mesh(0.0, 1.0, 0)


class TestStructuredGenerators:
    def test_single_cell_rectangle(self):
        mesh = build_structured_mesh(RectangleSpec(0, 1, 0, 1, 1, 1))
        assert mesh.n_triangles == 2
        assert mesh.n_vertices == 4
        assert len(mesh.boundary_edges) == 4

    def test_two_by_two_rectangle(self):
        mesh = build_structured_mesh(RectangleSpec(0, 1, 0, 1, 2, 2))
        assert mesh.n_triangles == 8
        assert mesh.n_vertices == 9

    @pytest.mark.parametrize("nx,ny", [(1, 1), (2, 3), (5, 4)])
    def test_rectangle_counts(self, nx, ny):
        mesh = build_structured_mesh(RectangleSpec(0, 2, -1, 1, nx, ny))
        assert mesh.n_triangles == 2 * nx * ny
        assert mesh.n_vertices == (nx + 1) * (ny + 1)

    def test_rectangle_area_exact(self):
        mesh = build_structured_mesh(RectangleSpec(0, 2, -1, 3, 4, 3))
        assert mesh.signed_areas().sum() == pytest.approx(8.0, rel=1e-14)

    def test_rectangle_labels(self):
        mesh = build_structured_mesh(RectangleSpec(0, 1, 0, 1, 3, 2))
        assert mesh.boundary_labels == (1, 2, 3, 4)

    def test_dike_vertices_inside_channel(self):
        mesh = build_structured_mesh(DikeSpec(90, 20))
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        assert np.all(y >= np.sin(x) - 1 - 1e-12)
        assert np.all(y <= np.sin(x) + 1 + 1e-12)

    def test_dike_area(self):
        # top and bottom curves are sampled on the same x grid, so the
        # piecewise-linear area equals the exact channel area
        mesh = build_structured_mesh(DikeSpec(40, 8))
        assert mesh.signed_areas().sum() == pytest.approx(8 * math.pi, rel=1e-12)

    def test_dike_labels(self):
        mesh = build_structured_mesh(DikeSpec(10, 3))
        assert mesh.boundary_labels == (1, 2, 3)
        labels = mesh.boundary_edges[:, 2]
        assert np.count_nonzero(labels == 2) == 3  # inflow face, ny edges
        assert np.count_nonzero(labels == 3) == 3

    def test_disk_polygonal_area_deficit_shrinks(self):
        deficits = []
        for n_theta in (12, 24, 48):
            mesh = build_structured_mesh(DiskSpec(1.0, 3, n_theta))
            polygon = 0.5 * n_theta * math.sin(2 * math.pi / n_theta)
            assert mesh.signed_areas().sum() == pytest.approx(polygon, rel=1e-12)
            deficits.append(math.pi - mesh.signed_areas().sum())
        assert deficits[0] > deficits[1] > deficits[2] > 0

    def test_disk_boundary_all_label_one(self):
        mesh = build_structured_mesh(DiskSpec(2.0, 2, 16))
        assert mesh.boundary_labels == (1,)
        assert len(mesh.boundary_edges) == 16

    def test_rejects_invalid_specs(self):
        with pytest.raises(ValueError):
            RectangleSpec(0, 0, 0, 1, 1, 1)
        with pytest.raises(ValueError):
            DiskSpec(-1.0, 2, 8)
        with pytest.raises(ValueError):
            DikeSpec(0, 2)
        with pytest.raises(ValueError):
            build_structured_mesh(IntervalSpec(0, 1, 4))


class TestConformity:
    @pytest.mark.parametrize(
        "spec",
        [
            RectangleSpec(0, 1, 0, 1, 1, 1),
            RectangleSpec(-1, 2, 0, 0.5, 4, 3),
            DikeSpec(20, 5),
            DiskSpec(1.0, 1, 3),
            DiskSpec(0.5, 4, 10),
        ],
    )
    def test_generator_outputs_pass(self, spec):
        report = validate_conformity(build_structured_mesh(spec))
        assert report.passed, report.summary()

    def test_hanging_node_detected_by_vertex(self):
        report = validate_conformity(hanging_node_mesh())
        assert not report.passed
        assert 3 in report.hanging_vertices
        assert "FAIL" in report.summary()

    def test_clockwise_triangle_fails_positive_area(self):
        mesh = TriMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            triangles=np.array([[0, 2, 1]]),
            boundary_edges=np.array([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
        )
        report = validate_conformity(mesh)
        assert report.nonpositive_triangles == [0]

    def test_unlabeled_boundary_edge_reported(self):
        mesh = TriMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            triangles=np.array([[0, 1, 2]]),
            boundary_edges=np.array([[0, 1, 1], [1, 2, 1]]),
        )
        report = validate_conformity(mesh)
        assert (0, 2) in report.unlabeled_boundary_edges

    def test_label_on_interior_edge_reported(self):
        mesh = build_structured_mesh(RectangleSpec(0, 1, 0, 1, 1, 1))
        bogus = np.vstack([mesh.boundary_edges, [[0, 3, 9]]])  # the diagonal
        tampered = TriMesh(mesh.vertices, mesh.triangles, bogus)
        report = validate_conformity(tampered)
        assert (0, 3) in report.mislabeled_interior_edges


class TestMetrics:
    def test_unit_right_triangle(self):
        mesh = TriMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            triangles=np.array([[0, 1, 2]]),
            boundary_edges=np.array([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
        )
        metrics = mesh_metrics(mesh)
        inradius = (2 - math.sqrt(2)) / 2
        assert metrics.h == pytest.approx(math.sqrt(2), rel=1e-14)
        assert metrics.max_aspect == pytest.approx(math.sqrt(2) / inradius, rel=1e-13)

    def test_equilateral_triangle_aspect(self):
        mesh = TriMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]),
            triangles=np.array([[0, 1, 2]]),
            boundary_edges=np.array([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
        )
        assert mesh_metrics(mesh).max_aspect == pytest.approx(2 * math.sqrt(3), rel=1e-13)

    def test_aspect_lower_bound_holds_on_generated_meshes(self):
        for spec in (RectangleSpec(0, 1, 0, 1, 3, 3), DiskSpec(1.0, 3, 12), DikeSpec(15, 4)):
            metrics = mesh_metrics(build_structured_mesh(spec))
            assert metrics.max_aspect >= 2.0
            assert metrics.quasi_uniformity >= 1.0
            assert metrics.h > 0

    def test_uniform_square_grid_quasi_uniformity(self):
        mesh = build_structured_mesh(RectangleSpec(0, 1, 0, 1, 4, 4))
        # congruent right triangles: ratio is exactly 1
        assert mesh_metrics(mesh).quasi_uniformity == pytest.approx(1.0, rel=1e-13)

    def test_degenerate_triangle_rejected(self):
        mesh = TriMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
            triangles=np.array([[0, 1, 2]]),
            boundary_edges=np.array([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
        )
        with pytest.raises(ValueError, match="degenerate"):
            mesh_metrics(mesh)


class TestMeshIo:
    def test_round_trip_identity(self, tmp_path):
        mesh = build_structured_mesh(RectangleSpec(0, 1, 0, 1, 2, 2))
        path = tmp_path / "square.mesh"
        write_mesh(mesh, path)
        back = read_mesh(path)
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.triangles, mesh.triangles)
        assert np.array_equal(back.boundary_edges, mesh.boundary_edges)

    def test_round_trip_irrational_coordinates(self, tmp_path):
        mesh = build_structured_mesh(DikeSpec(7, 3))
        path = tmp_path / "dike.mesh"
        write_mesh(mesh, path)
        back = read_mesh(path)
        assert np.array_equal(back.vertices, mesh.vertices)

    def test_out_of_range_index_names_line(self, tmp_path):
        path = tmp_path / "bad.mesh"
        path.write_text("femkit-mesh 1\n3 1 0\n0 0\n1 0\n0 1\n0 1 7\n")
        with pytest.raises(MeshFormatError, match="line 6"):
            read_mesh(path)

    def test_no_elements_rejected(self, tmp_path):
        path = tmp_path / "empty.mesh"
        path.write_text("femkit-mesh 1\n3 0 0\n0 0\n1 0\n0 1\n")
        with pytest.raises(MeshFormatError, match="no elements"):
            read_mesh(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "hdr.mesh"
        path.write_text("not-a-mesh 1\n1 1 1\n")
        with pytest.raises(MeshFormatError, match="line 1"):
            read_mesh(path)

    def test_comments_and_blank_lines_allowed(self, tmp_path):
        path = tmp_path / "c.mesh"
        path.write_text(
            "# a comment\nfemkit-mesh 1\n\n3 1 3  # counts\n0 0\n1 0\n0 1\n0 1 2\n0 1 1\n1 2 1\n2 0 1\n"
        )
        mesh = read_mesh(path)
        assert mesh.n_triangles == 1

    def test_non_conforming_rejected_unless_disabled(self, tmp_path):
        path = tmp_path / "hang.mesh"
        write_mesh(hanging_node_mesh(), path)
        with pytest.raises(MeshFormatError, match="not conforming"):
            read_mesh(path)
        mesh = read_mesh(path, validate=False)
        assert mesh.n_triangles == 3
