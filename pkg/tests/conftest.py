import numpy as np
import pytest

from femkit.mesh import RectangleSpec, TriMesh, build_interval_mesh, build_structured_mesh


@pytest.fixture
def interval6():
    """Uniform 6-vertex partition of (0, 1)."""
    return build_interval_mesh(0.0, 1.0, 5)


@pytest.fixture
def unit_square_1():
    """Single-cell unit square (2 triangles)."""
    return build_structured_mesh(RectangleSpec(0.0, 1.0, 0.0, 1.0, 1, 1))


@pytest.fixture
def unit_square_2():
    """2x2 unit square (8 triangles, 9 vertices)."""
    return build_structured_mesh(RectangleSpec(0.0, 1.0, 0.0, 1.0, 2, 2))


@pytest.fixture
def reference_triangle():
    """The reference triangle as a one-element mesh, all edges labeled 1."""
    return TriMesh(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=np.array([[0, 1, 1], [1, 2, 1], [2, 0, 1]]),
    )
