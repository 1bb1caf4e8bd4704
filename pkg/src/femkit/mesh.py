"""1D partitions and 2D conforming triangulations with labeled boundaries.

All 2D meshes are produced by deterministic structured generators: a
rectangle grid split along a fixed diagonal, the same grid mapped onto a
sinusoidal channel, and a polar grid on the disk with a triangle fan at the
center.  Unstructured (Delaunay) meshing is out of scope.
"""

import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Mesh1D",
    "TriMesh",
    "MeshMetrics",
    "IntervalSpec",
    "RectangleSpec",
    "DiskSpec",
    "DikeSpec",
    "DomainSpec",
    "ConformityReport",
    "MeshFormatError",
    "build_interval_mesh",
    "build_structured_mesh",
    "validate_conformity",
    "mesh_metrics",
    "read_mesh",
    "write_mesh",
]

MESH_FORMAT_MAGIC = "femkit-mesh"
MESH_FORMAT_VERSION = 1

# Boundary label conventions used by the generators.
RECT_BOTTOM, RECT_RIGHT, RECT_TOP, RECT_LEFT = 1, 2, 3, 4
DIKE_WALLS, DIKE_INFLOW, DIKE_OUTFLOW = 1, 2, 3
DISK_BOUNDARY = 1


class MeshFormatError(ValueError):
    """Mesh file cannot be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Mesh1D:
    """Partition of an interval into consecutive elements.

    ``vertices`` is a strictly increasing array of length M; element i is
    the open interval (vertices[i], vertices[i+1]).  The two endpoints carry
    the string labels in ``boundary_labels`` (left endpoint first).
    """

    vertices: np.ndarray
    boundary_labels: tuple[str, str] = ("left", "right")

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 1 or len(verts) < 2:
            raise ValueError("a 1D mesh needs at least two vertices")
        if not np.all(np.diff(verts) > 0):
            raise ValueError("1D mesh vertices must be strictly increasing")
        verts.flags.writeable = False
        object.__setattr__(self, "vertices", verts)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.vertices) - 1

    def element(self, i: int) -> tuple[float, float]:
        return float(self.vertices[i]), float(self.vertices[i + 1])


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangulation with integer-labeled boundary edges.

    ``vertices``: (nv, 2) coordinates.  ``triangles``: (nt, 3) vertex
    indices, counter-clockwise.  ``boundary_edges``: (nb, 3) rows
    (v0, v1, label); generators store each edge oriented so the domain
    interior lies on its left.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        tris = np.asarray(self.triangles, dtype=np.int64)
        bnd = np.asarray(self.boundary_edges, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must be an (nv, 2) array")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValueError("triangles must be an (nt, 3) array")
        if len(tris) == 0:
            raise ValueError("mesh has no elements")
        if bnd.ndim != 2 or bnd.shape[1] != 3:
            raise ValueError("boundary_edges must be an (nb, 3) array")
        nv = len(verts)
        if tris.min() < 0 or tris.max() >= nv:
            raise ValueError("triangle vertex index out of range")
        if len(bnd) and (bnd[:, :2].min() < 0 or bnd[:, :2].max() >= nv):
            raise ValueError("boundary edge vertex index out of range")
        for arr in (verts, tris, bnd):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "boundary_edges", bnd)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def boundary_labels(self) -> tuple[int, ...]:
        return tuple(sorted(set(int(l) for l in self.boundary_edges[:, 2])))

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique mesh edges as sorted vertex pairs, lexicographically ordered."""
        tri = self.triangles
        pairs = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        pairs.sort(axis=1)
        uniq = np.unique(pairs, axis=0)
        uniq.flags.writeable = False
        return uniq

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        """Map from sorted vertex pair to its row in ``edges``."""
        return {(int(a), int(b)): k for k, (a, b) in enumerate(self.edges)}

    def signed_areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        d1 = v[t[:, 1]] - v[t[:, 0]]
        d2 = v[t[:, 2]] - v[t[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class MeshMetrics:
    """Size and shape-regularity summary of a triangulation.

    ``h``: largest circumscribed-circle diameter.  ``max_aspect``: largest
    ratio of longest edge to inradius (2*area/perimeter).
    ``quasi_uniformity``: h divided by the smallest circumscribed diameter.
    """

    h: float
    max_aspect: float
    quasi_uniformity: float


# ---------------------------------------------------------------------------
# Domain specifications


@dataclass(frozen=True)
class IntervalSpec:
    a: float
    b: float
    n: int

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"interval requires a < b (got {self.a}, {self.b})")
        if self.n < 1:
            raise ValueError("interval element count must be >= 1")


@dataclass(frozen=True)
class RectangleSpec:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("rectangle requires x0 < x1 and y0 < y1")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("rectangle cell counts must be >= 1")


@dataclass(frozen=True)
class DiskSpec:
    radius: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("disk radius must be positive")
        if self.n_r < 1 or self.n_theta < 3:
            raise ValueError("disk needs n_r >= 1 and n_theta >= 3")


@dataclass(frozen=True)
class DikeSpec:
    """Sinusoidal channel: [-2*pi, 2*pi] x [0, 1] mapped by (s, t) -> (s, sin(s) - 1 + 2t).

    Labels: 1 bottom/top curves, 2 left inflow face, 3 right outflow face.
    """

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("dike cell counts must be >= 1")


DomainSpec = IntervalSpec | RectangleSpec | DiskSpec | DikeSpec


# ---------------------------------------------------------------------------
# Generators


def _affine_points(a: float, b: float, n: int) -> np.ndarray:
    # (a*(n-i) + b*i)/n lands exactly on clean fractions where they exist
    i = np.arange(n + 1, dtype=float)
    return (a * (n - i) + b * i) / n


def build_interval_mesh(a: float, b: float, n: int) -> Mesh1D:
    """Uniform partition of (a, b) into n elements (n + 1 vertices)."""
    spec = IntervalSpec(a, b, n)  # validates
    return Mesh1D(vertices=_affine_points(spec.a, spec.b, spec.n))


def _grid_mesh(xs: np.ndarray, ys: np.ndarray, labels: tuple[int, int, int, int]) -> TriMesh:
    """Tensor grid split into triangles along the lower-left/upper-right diagonal."""
    nx, ny = len(xs) - 1, len(ys) - 1
    bottom, right, top, left = labels

    def vid(i, j):
        return j * (nx + 1) + i

    xx, yy = np.meshgrid(xs, ys)
    vertices = np.column_stack((xx.ravel(), yy.ravel()))

    triangles = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))

    # Boundary traversal is CCW: interior on the left of each edge.
    bnd = []
    for i in range(nx):
        bnd.append((vid(i, 0), vid(i + 1, 0), bottom))
    for j in range(ny):
        bnd.append((vid(nx, j), vid(nx, j + 1), right))
    for i in range(nx, 0, -1):
        bnd.append((vid(i, ny), vid(i - 1, ny), top))
    for j in range(ny, 0, -1):
        bnd.append((vid(0, j), vid(0, j - 1), left))

    return TriMesh(vertices=vertices, triangles=np.array(triangles), boundary_edges=np.array(bnd))


def _build_rectangle(spec: RectangleSpec) -> TriMesh:
    xs = _affine_points(spec.x0, spec.x1, spec.nx)
    ys = _affine_points(spec.y0, spec.y1, spec.ny)
    return _grid_mesh(xs, ys, (RECT_BOTTOM, RECT_RIGHT, RECT_TOP, RECT_LEFT))


def _build_dike(spec: DikeSpec) -> TriMesh:
    ss = _affine_points(-2.0 * math.pi, 2.0 * math.pi, spec.nx)
    ts = _affine_points(0.0, 1.0, spec.ny)
    base = _grid_mesh(ss, ts, (DIKE_WALLS, DIKE_OUTFLOW, DIKE_WALLS, DIKE_INFLOW))
    s = base.vertices[:, 0]
    t = base.vertices[:, 1]
    mapped = np.column_stack((s, np.sin(s) - 1.0 + 2.0 * t))
    # The map has Jacobian [[1, 0], [cos s, 2]], det 2 > 0, so the CCW
    # orientation of the base grid is preserved.
    return TriMesh(vertices=mapped, triangles=base.triangles, boundary_edges=base.boundary_edges)


def _build_disk(spec: DiskSpec) -> TriMesh:
    n_r, n_t = spec.n_r, spec.n_theta
    radii = _affine_points(0.0, spec.radius, n_r)[1:]
    theta = 2.0 * math.pi * np.arange(n_t) / n_t

    vertices = [np.zeros((1, 2))]
    for r in radii:
        vertices.append(np.column_stack((r * np.cos(theta), r * np.sin(theta))))
    vertices = np.vstack(vertices)

    def ring(k, j):  # k = 1..n_r, j modulo n_t
        return 1 + (k - 1) * n_t + (j % n_t)

    triangles = []
    for j in range(n_t):  # center fan replaces the degenerate r = 0 ring
        triangles.append((0, ring(1, j), ring(1, j + 1)))
    for k in range(1, n_r):
        for j in range(n_t):
            a, b = ring(k, j), ring(k + 1, j)
            c, d = ring(k + 1, j + 1), ring(k, j + 1)
            triangles.append((a, b, c))
            triangles.append((a, c, d))

    bnd = [(ring(n_r, j), ring(n_r, j + 1), DISK_BOUNDARY) for j in range(n_t)]
    return TriMesh(vertices=vertices, triangles=np.array(triangles), boundary_edges=np.array(bnd))


def build_structured_mesh(spec: DomainSpec) -> TriMesh:
    """Build the triangulation described by a 2D domain specification."""
    if isinstance(spec, RectangleSpec):
        return _build_rectangle(spec)
    if isinstance(spec, DikeSpec):
        return _build_dike(spec)
    if isinstance(spec, DiskSpec):
        return _build_disk(spec)
    if isinstance(spec, IntervalSpec):
        raise ValueError("interval specs describe 1D meshes; use build_interval_mesh")
    raise TypeError(f"unknown domain spec: {spec!r}")


# ---------------------------------------------------------------------------
# Validation and metrics


@dataclass
class ConformityReport:
    """Per-invariant results of a mesh conformity check.

    Each list holds the offending indices (or vertex pairs); an empty list
    means the invariant passed.
    """

    nonpositive_triangles: list[int]
    overshared_edges: list[tuple[int, int]]
    unlabeled_boundary_edges: list[tuple[int, int]]
    mislabeled_interior_edges: list[tuple[int, int]]
    hanging_vertices: list[int]

    @property
    def passed(self) -> bool:
        return not (
            self.nonpositive_triangles
            or self.overshared_edges
            or self.unlabeled_boundary_edges
            or self.mislabeled_interior_edges
            or self.hanging_vertices
        )

    def summary(self) -> str:
        lines = []
        checks = [
            ("positive triangle orientation", self.nonpositive_triangles),
            ("edge shared by at most two triangles", self.overshared_edges),
            ("every single-triangle edge labeled as boundary", self.unlabeled_boundary_edges),
            ("no label on interior or phantom edges", self.mislabeled_interior_edges),
            ("no hanging vertices", self.hanging_vertices),
        ]
        for name, offenders in checks:
            if offenders:
                shown = ", ".join(str(o) for o in offenders[:8])
                more = "" if len(offenders) <= 8 else f" (+{len(offenders) - 8} more)"
                lines.append(f"FAIL {name}: {shown}{more}")
            else:
                lines.append(f"pass {name}")
        return "\n".join(lines)


def validate_conformity(mesh: TriMesh) -> ConformityReport:
    """Check geometric conformity and report every violated invariant.

    Detects clockwise or degenerate triangles, edges shared by three or more
    triangles, single-triangle edges missing a boundary label, labels on
    interior edges, and vertices lying in the interior of another triangle's
    edge (hanging nodes).
    """
    areas = mesh.signed_areas()
    nonpositive = [int(i) for i in np.nonzero(areas <= 0)[0]]

    counts: Counter[tuple[int, int]] = Counter()
    for t in mesh.triangles:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            counts[(int(min(a, b)), int(max(a, b)))] += 1

    declared = Counter(
        (int(min(a, b)), int(max(a, b))) for a, b, _ in mesh.boundary_edges
    )

    overshared = sorted(e for e, c in counts.items() if c > 2)
    unlabeled = sorted(e for e, c in counts.items() if c == 1 and e not in declared)
    mislabeled = sorted(e for e in declared if counts.get(e, 0) != 1)

    # A hanging node shows up as a vertex strictly inside a single-count edge.
    hanging: set[int] = set()
    verts = mesh.vertices
    single_edges = [e for e, c in counts.items() if c == 1]
    if single_edges:
        scale = max(float(np.ptp(verts[:, 0])), float(np.ptp(verts[:, 1])), 1e-30)
        tol = 1e-12 * scale * scale
        for a, b in single_edges:
            pa, pb = verts[a], verts[b]
            d = pb - pa
            rel = verts - pa
            cross = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0])
            dot = rel @ d
            len2 = float(d @ d)
            inside = (cross <= tol) & (dot > tol) & (dot < len2 - tol)
            inside[[a, b]] = False
            hanging.update(int(v) for v in np.nonzero(inside)[0])

    return ConformityReport(
        nonpositive_triangles=nonpositive,
        overshared_edges=overshared,
        unlabeled_boundary_edges=unlabeled,
        mislabeled_interior_edges=mislabeled,
        hanging_vertices=sorted(hanging),
    )


def mesh_metrics(mesh: TriMesh) -> MeshMetrics:
    """Compute h, the worst aspect ratio, and the quasi-uniformity ratio."""
    v = mesh.vertices
    t = mesh.triangles
    e0 = np.linalg.norm(v[t[:, 1]] - v[t[:, 0]], axis=1)
    e1 = np.linalg.norm(v[t[:, 2]] - v[t[:, 1]], axis=1)
    e2 = np.linalg.norm(v[t[:, 0]] - v[t[:, 2]], axis=1)
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        bad = int(np.argmax(areas <= 0))
        raise ValueError(f"degenerate or inverted triangle {bad} (area {areas[bad]:g})")

    perimeter = e0 + e1 + e2
    inradius = 2.0 * areas / perimeter
    longest = np.maximum(e0, np.maximum(e1, e2))
    circumdiameter = e0 * e1 * e2 / (2.0 * areas)

    return MeshMetrics(
        h=float(circumdiameter.max()),
        max_aspect=float((longest / inradius).max()),
        quasi_uniformity=float(circumdiameter.max() / circumdiameter.min()),
    )


# ---------------------------------------------------------------------------
# Text format I/O
#
#   femkit-mesh 1
#   <nv> <nt> <nb>
#   x y            (nv lines)
#   i j k          (nt lines, 0-based, CCW)
#   i j label      (nb lines)
#
# Whitespace-separated; '#' starts a comment.


def write_mesh(mesh: TriMesh, path) -> None:
    """Write a triangulation in the plain-text mesh format."""
    lines = [f"{MESH_FORMAT_MAGIC} {MESH_FORMAT_VERSION}"]
    lines.append(f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)}")
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    for i, j, label in mesh.boundary_edges:
        lines.append(f"{i} {j} {label}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path, validate: bool = True) -> TriMesh:
    """Read a triangulation from the plain-text mesh format.

    Raises :class:`MeshFormatError` (with the line number) on malformed
    headers, bad counts, or out-of-range indices.  With ``validate=True``
    the mesh must also pass :func:`validate_conformity`.
    """
    with open(path) as fh:
        raw = fh.readlines()

    tokens: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.append((lineno, body.split()))

    if not tokens:
        raise MeshFormatError("empty mesh file")

    lineno, header = tokens[0]
    if len(header) != 2 or header[0] != MESH_FORMAT_MAGIC:
        raise MeshFormatError(f"expected header '{MESH_FORMAT_MAGIC} {MESH_FORMAT_VERSION}'", lineno)
    if header[1] != str(MESH_FORMAT_VERSION):
        raise MeshFormatError(f"unsupported format version {header[1]}", lineno)

    if len(tokens) < 2:
        raise MeshFormatError("missing count line", lineno)
    lineno, counts = tokens[1]
    try:
        nv, nt, nb = (int(c) for c in counts)
    except ValueError:
        raise MeshFormatError("count line must be '<nv> <nt> <nb>'", lineno) from None
    if nt == 0:
        raise MeshFormatError("no elements", lineno)

    body = tokens[2:]
    if len(body) != nv + nt + nb:
        raise MeshFormatError(
            f"expected {nv + nt + nb} data lines, found {len(body)}", lineno
        )

    def parse_row(idx, width, kind, caster):
        row_lineno, fields = body[idx]
        if len(fields) != width:
            raise MeshFormatError(f"expected {width} fields in {kind} line", row_lineno)
        try:
            return row_lineno, [caster(f) for f in fields]
        except ValueError:
            raise MeshFormatError(f"bad {kind} value", row_lineno) from None

    vertices = np.empty((nv, 2))
    for i in range(nv):
        _, vals = parse_row(i, 2, "vertex", float)
        vertices[i] = vals

    triangles = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        row_lineno, vals = parse_row(nv + i, 3, "triangle", int)
        if min(vals) < 0 or max(vals) >= nv:
            raise MeshFormatError(f"triangle vertex index out of range: {vals}", row_lineno)
        triangles[i] = vals

    boundary = np.empty((nb, 3), dtype=np.int64)
    for i in range(nb):
        row_lineno, vals = parse_row(nv + nt + i, 3, "boundary edge", int)
        if min(vals[:2]) < 0 or max(vals[:2]) >= nv:
            raise MeshFormatError(f"boundary edge vertex index out of range: {vals[:2]}", row_lineno)
        boundary[i] = vals

    mesh = TriMesh(vertices=vertices, triangles=triangles, boundary_edges=boundary)
    if validate:
        report = validate_conformity(mesh)
        if not report.passed:
            raise MeshFormatError("mesh is not conforming:\n" + report.summary())
    return mesh
