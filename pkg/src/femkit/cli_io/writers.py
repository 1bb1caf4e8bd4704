"""Deterministic field and mesh output: CSV per dof, legacy ASCII VTK.

Floats are rendered with Python's shortest round-trip representation, so
two runs of the same problem produce byte-identical files.
"""

import os

import numpy as np

from ..elements import FemField
from ..mesh import TriMesh

__all__ = ["write_field_csv", "write_vtk", "format_float"]


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(value))


def _ensure_parent(path) -> None:
    parent = os.path.dirname(str(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_field_csv(field: FemField, path) -> None:
    """One row per dof in dof order: ``x,value`` in 1D, ``x,y,value`` in 2D.

    P2 rows include edge-midpoint dofs, so the file is a lossless record
    of the discrete function.
    """
    _ensure_parent(path)
    coords = field.dofmap.dof_coords
    lines = ["x,value" if field.space.dim == 1 else "x,y,value"]
    for coord, value in zip(coords, field.coefficients):
        cols = [format_float(c) for c in coord] + [format_float(value)]
        lines.append(",".join(cols))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_vtk(mesh: TriMesh, fields: dict, path, title: str = "femkit output") -> None:
    """Legacy ASCII VTK (version 3.0) unstructured grid with point data.

    ``fields`` maps a name to a scalar :class:`FemField` or to a
    ``(FemField, FemField)`` pair written as a vector.  Cells are linear
    triangles, so P2 fields are exported at the mesh vertices only (their
    first ``n_vertices`` coefficients); the dof CSV is the lossless
    companion.
    """
    _ensure_parent(path)
    nv = mesh.n_vertices
    nt = mesh.n_triangles

    def vertex_values(field: FemField) -> np.ndarray:
        if field.dofmap.mesh is not mesh:
            raise ValueError("field belongs to a different mesh")
        return field.coefficients[:nv]

    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{format_float(x)} {format_float(y)} 0.0")
    lines.append(f"CELLS {nt} {4 * nt}")
    for i, j, k in mesh.triangles:
        lines.append(f"3 {i} {j} {k}")
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["5"] * nt)

    if fields:
        lines.append(f"POINT_DATA {nv}")
        for name, data in fields.items():
            if isinstance(data, FemField):
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(format_float(v) for v in vertex_values(data))
            else:
                fx, fy = data
                vx, vy = vertex_values(fx), vertex_values(fy)
                lines.append(f"VECTORS {name} double")
                lines.extend(
                    f"{format_float(a)} {format_float(b)} 0.0" for a, b in zip(vx, vy)
                )

    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
