"""Tensor-product space-time meshes and skeleton face classification.

A space-time mesh is a partition of (0, T) into slabs times one spatial
mesh of the box domain, shared by every slab.  Spatial meshes are
structured: intervals in 1D, axis-aligned rectangles or rectangles halved
along the lower-left to upper-right diagonal in 2D.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


class FaceTag(enum.Enum):
    SPACE_LIKE = "space-like"
    TIME_LIKE = "time-like"
    INITIAL = "initial"
    FINAL = "final"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class TimePartition:
    knots: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise MeshError("time partition needs at least two knots")
        if knots[0] != 0.0:
            raise MeshError("time partition must start at t = 0")
        if np.any(np.diff(knots) <= 0):
            raise MeshError("time knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)

    @classmethod
    def uniform(cls, final_time, slab_count):
        if slab_count < 1:
            raise MeshError("slab_count must be >= 1")
        if not final_time > 0:
            raise MeshError("final time must be positive")
        knots = np.linspace(0.0, final_time, slab_count + 1)
        return cls(knots)

    @property
    def slab_count(self):
        return self.knots.size - 1

    @property
    def slab_lengths(self):
        return np.diff(self.knots)

    @property
    def h_t(self):
        return float(self.slab_lengths.max())

    @property
    def final_time(self):
        return float(self.knots[-1])

    def is_uniform(self, rtol=1e-12):
        lengths = self.slab_lengths
        return bool(np.all(np.abs(lengths - lengths[0]) <= rtol * lengths[0]))


@dataclass(frozen=True)
class SpatialMesh:
    """Spatial partition of a box with precomputed facet connectivity.

    Interior facet ``f`` separates ``interior_cells[f, 0]`` and
    ``interior_cells[f, 1]``; ``interior_normals[f]`` points out of the
    first cell.  Facet geometry is stored as vertex coordinates, shape
    ``(n, 1, d)`` (points) in 1D and ``(n, 2, d)`` (segments) in 2D.
    """

    dim: int
    cell_shape: str
    bounds: tuple
    divisions: tuple
    vertices: np.ndarray
    cells: np.ndarray
    diameters: np.ndarray
    centroids: np.ndarray
    volumes: np.ndarray
    interior_cells: np.ndarray
    interior_normals: np.ndarray
    interior_facets: np.ndarray
    interior_measures: np.ndarray
    boundary_cells: np.ndarray
    boundary_normals: np.ndarray
    boundary_facets: np.ndarray
    boundary_measures: np.ndarray

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @property
    def h_x(self):
        return float(self.diameters.max())

    @property
    def measure(self):
        return float(np.prod([b - a for a, b in self.bounds]))

    @property
    def boundary_measure(self):
        if self.dim == 1:
            return 2.0
        (a, b), (c, d) = self.bounds
        return 2.0 * ((b - a) + (d - c))

    @property
    def tolerance(self):
        diam = math.sqrt(sum((b - a) ** 2 for a, b in self.bounds))
        return 1e-12 * diam

    def cell_vertices(self, cell):
        return self.vertices[self.cells[cell]]

    def locate(self, points):
        """Return the index of a cell containing each point (-1 if outside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        tol = self.tolerance
        idx = []
        for axis, ((a, b), n) in enumerate(zip(self.bounds, self.divisions)):
            width = (b - a) / n
            i = np.floor((pts[:, axis] - a) / width).astype(int)
            i = np.clip(i, 0, n - 1)
            inside = (pts[:, axis] >= a - tol) & (pts[:, axis] <= b + tol)
            i[~inside] = -1
            idx.append(i)
        if self.dim == 1:
            return idx[0]
        ix, iy = idx
        out = np.full(pts.shape[0], -1)
        ok = (ix >= 0) & (iy >= 0)
        rect = ix * self.divisions[1] + iy
        if self.cell_shape == "rectangle":
            out[ok] = rect[ok]
            return out
        (ax, bx), (ay, by) = self.bounds
        wx = (bx - ax) / self.divisions[0]
        wy = (by - ay) / self.divisions[1]
        u = (pts[:, 0] - ax) / wx - ix
        v = (pts[:, 1] - ay) / wy - iy
        upper = v > u
        out[ok] = 2 * rect[ok] + upper[ok]
        return out


@dataclass(frozen=True)
class Face:
    """One skeleton face of the space-time mesh.

    ``elements`` holds ``(slab, cell)`` pairs: two for interior faces (for
    space-like faces the lower slab comes first), one otherwise.  ``vertices``
    are the spatial vertices of the patch and ``times`` is ``(t0, t1)``, with
    ``t0 == t1`` for faces at constant time.
    """

    tag: FaceTag
    elements: tuple
    normal_x: np.ndarray
    normal_t: int
    vertices: np.ndarray
    times: tuple
    h_fx: float = float("nan")

    @property
    def is_space_like(self):
        return self.tag in (FaceTag.SPACE_LIKE, FaceTag.INITIAL, FaceTag.FINAL)

    @property
    def measure(self):
        if self.is_space_like:
            return _patch_measure(self.vertices)
        length = 1.0 if self.vertices.shape[0] == 1 else float(
            np.linalg.norm(self.vertices[1] - self.vertices[0]))
        return length * (self.times[1] - self.times[0])


def _patch_measure(verts):
    if verts.shape[1] == 1:
        return float(abs(verts[1, 0] - verts[0, 0]))
    x, y = verts[:, 0], verts[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


@dataclass(frozen=True)
class SpaceTimeMesh:
    time: TimePartition
    space: SpatialMesh
    faces: list = field(default_factory=list, repr=False)

    @property
    def slab_count(self):
        return self.time.slab_count

    @property
    def h_x(self):
        return self.space.h_x

    @property
    def h_t(self):
        return self.time.h_t

    @property
    def element_count(self):
        return self.slab_count * self.space.n_cells

    def slab_meshes(self):
        return [self.space] * self.slab_count

    def face_counts(self):
        counts = {tag: 0 for tag in FaceTag}
        for f in self.faces:
            counts[f.tag] += 1
        return counts

    def summary(self):
        counts = self.face_counts()
        lines = [
            f"dimension          {self.space.dim}",
            f"cell shape         {self.space.cell_shape}",
            f"spatial cells      {self.space.n_cells}",
            f"time slabs         {self.slab_count}",
            f"elements           {self.element_count}",
            f"h_x                {self.h_x:.6g}",
            f"h_t                {self.h_t:.6g}",
        ]
        for tag in FaceTag:
            lines.append(f"{tag.value + ' faces':<19}{counts[tag]}")
        return "\n".join(lines)


def build_spatial_mesh(bounds, divisions, cell_shape=None):
    bounds = tuple((float(a), float(b)) for a, b in bounds)
    divisions = tuple(int(n) for n in np.atleast_1d(divisions))
    dim = len(bounds)
    if dim not in (1, 2):
        raise MeshError(f"only d = 1 or 2 supported, got d = {dim}")
    if len(divisions) == 1 and dim == 2:
        divisions = divisions * 2
    if len(divisions) != dim:
        raise MeshError("one division count per axis required")
    if any(n < 1 for n in divisions):
        raise MeshError("divisions must be >= 1")
    if any(not b > a for a, b in bounds):
        raise MeshError("domain has zero measure")
    if cell_shape is None:
        cell_shape = "interval" if dim == 1 else "triangle"
    if cell_shape in ("split-triangles", "triangles"):
        cell_shape = "triangle"
    if (cell_shape == "interval") != (dim == 1):
        raise MeshError("cell_shape 'interval' is required exactly when d = 1")
    if cell_shape not in ("interval", "triangle", "rectangle"):
        raise MeshError(f"unknown cell shape {cell_shape!r}")

    if dim == 1:
        return _interval_mesh(bounds, divisions)
    return _planar_mesh(bounds, divisions, cell_shape)


def _interval_mesh(bounds, divisions):
    (a, b), = bounds
    n, = divisions
    x = np.linspace(a, b, n + 1)
    vertices = x[:, None]
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    diam = np.diff(x)
    centroids = (0.5 * (x[:-1] + x[1:]))[:, None]
    icells = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    inormals = np.ones((n - 1, 1))
    ifacets = x[1:-1, None, None]
    bcells = np.array([0, n - 1])
    bnormals = np.array([[-1.0], [1.0]])
    bfacets = np.array([[[a]], [[b]]])
    return SpatialMesh(
        dim=1, cell_shape="interval", bounds=bounds, divisions=divisions,
        vertices=vertices, cells=cells, diameters=diam, centroids=centroids,
        volumes=diam.copy(),
        interior_cells=icells, interior_normals=inormals,
        interior_facets=ifacets, interior_measures=np.ones(n - 1),
        boundary_cells=bcells, boundary_normals=bnormals,
        boundary_facets=bfacets, boundary_measures=np.ones(2),
    )


def _planar_mesh(bounds, divisions, cell_shape):
    (ax, bx), (ay, by) = bounds
    nx, ny = divisions
    xs = np.linspace(ax, bx, nx + 1)
    ys = np.linspace(ay, by, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            if cell_shape == "rectangle":
                cells.append((v00, v10, v11, v01))
            else:
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
    cells = np.array(cells)
    cv = vertices[cells]
    centroids = cv.mean(axis=1)
    nv = cells.shape[1]
    diam = np.zeros(len(cells))
    for a in range(nv):
        for b in range(a + 1, nv):
            diam = np.maximum(diam, np.linalg.norm(cv[:, a] - cv[:, b], axis=1))
    x, y = cv[..., 0], cv[..., 1]
    volumes = 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=1) - y * np.roll(x, -1, axis=1), axis=1))

    edges = {}
    for c, verts in enumerate(cells):
        for a in range(nv):
            e = (verts[a], verts[(a + 1) % nv])
            edges.setdefault(tuple(sorted(e)), []).append((c, e))

    icells, inormals, ifacets = [], [], []
    bcells, bnormals, bfacets = [], [], []
    for key in sorted(edges):
        owners = edges[key]
        c0, (v0, v1) = owners[0]
        p0, p1 = vertices[v0], vertices[v1]
        tangent = p1 - p0
        # counterclockwise cells: the outward normal is the tangent rotated clockwise
        normal = np.array([tangent[1], -tangent[0]]) / np.linalg.norm(tangent)
        seg = np.array([p0, p1])
        if len(owners) == 2:
            icells.append((c0, owners[1][0]))
            inormals.append(normal)
            ifacets.append(seg)
        elif len(owners) == 1:
            bcells.append(c0)
            bnormals.append(normal)
            bfacets.append(seg)
        else:
            raise MeshError("non-conforming edge shared by more than two cells")
    ifacets = np.array(ifacets).reshape(-1, 2, 2)
    bfacets = np.array(bfacets).reshape(-1, 2, 2)
    return SpatialMesh(
        dim=2, cell_shape=cell_shape, bounds=bounds, divisions=divisions,
        vertices=vertices, cells=cells, diameters=diam, centroids=centroids,
        volumes=volumes,
        interior_cells=np.array(icells, dtype=int).reshape(-1, 2),
        interior_normals=np.array(inormals).reshape(-1, 2),
        interior_facets=ifacets,
        interior_measures=np.linalg.norm(ifacets[:, 1] - ifacets[:, 0], axis=1),
        boundary_cells=np.array(bcells, dtype=int),
        boundary_normals=np.array(bnormals).reshape(-1, 2),
        boundary_facets=bfacets,
        boundary_measures=np.linalg.norm(bfacets[:, 1] - bfacets[:, 0], axis=1),
    )


def facet_sizes(space):
    """Spatial face sizes h_{F_x}: min neighbour diameter inside, cell diameter on the boundary."""
    d = space.diameters
    interior = np.minimum(d[space.interior_cells[:, 0]], d[space.interior_cells[:, 1]])
    boundary = d[space.boundary_cells]
    return interior, boundary


def classify_faces(time, space):
    """Enumerate every skeleton face of ``space x time`` with its tag."""
    faces = []
    N = time.slab_count
    knots = time.knots
    h_int, h_bnd = facet_sizes(space)
    zero = np.zeros(space.dim)
    for c in range(space.n_cells):
        verts = space.cell_vertices(c)
        faces.append(Face(FaceTag.INITIAL, ((0, c),), zero, -1, verts, (0.0, 0.0)))
        for n in range(N - 1):
            t = float(knots[n + 1])
            faces.append(Face(FaceTag.SPACE_LIKE, ((n, c), (n + 1, c)), zero, 1, verts, (t, t)))
        T = float(knots[-1])
        faces.append(Face(FaceTag.FINAL, ((N - 1, c),), zero, 1, verts, (T, T)))
    for n in range(N):
        interval = (float(knots[n]), float(knots[n + 1]))
        for f, (c0, c1) in enumerate(space.interior_cells):
            faces.append(Face(FaceTag.TIME_LIKE, ((n, c0), (n, c1)),
                              space.interior_normals[f], 0,
                              space.interior_facets[f], interval, float(h_int[f])))
        for f, c in enumerate(space.boundary_cells):
            faces.append(Face(FaceTag.DIRICHLET, ((n, c),),
                              space.boundary_normals[f], 0,
                              space.boundary_facets[f], interval, float(h_bnd[f])))
    return faces


def build_mesh(bounds, divisions, slab_count, final_time=1.0, cell_shape=None):
    """Build a uniform space-time mesh of ``box x (0, final_time)``.

    >>> m = build_mesh([(-2, 2)], 20, 20)
    >>> m.element_count, round(m.h_x, 12), m.h_t
    (400, 0.2, 0.05)
    """
    space = build_spatial_mesh(bounds, divisions, cell_shape)
    time = TimePartition.uniform(final_time, slab_count)
    return SpaceTimeMesh(time=time, space=space, faces=classify_faces(time, space))


def slab_count_for_ratio(final_time, h_x, ratio):
    """Number of uniform slabs so that h_t <= ratio * h_x (as close as possible)."""
    if not ratio > 0:
        raise MeshError("h_t / h_x ratio must be positive")
    return max(1, math.ceil(final_time / (ratio * h_x) - 1e-9))
