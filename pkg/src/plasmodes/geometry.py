"""Triangulated strictly convex surfaces, reference/physical frames and
volume quadrature grids.

The reference body ``B`` is a unit-size convex domain; the physical particle
is ``D = z + delta * B``.  All surface meshes are flat-triangle meshes with
outward orientation.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import GeometryError, MeshStructureError

__all__ = [
    "SurfaceMesh",
    "ConvexityReport",
    "ParticleFrame",
    "VolumeGrid",
    "make_sphere",
    "make_ellipsoid",
    "check_strict_convexity",
    "rescale",
    "voxel_grid",
    "read_off",
    "write_off",
    "read_stl",
    "write_stl",
]


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Closed, outward-oriented triangulation of a convex surface.

    Parameters
    ----------
    vertices : (V, 3) array_like
        Vertex positions.
    triangles : (T, 3) array_like of int
        Vertex indices per panel, counter-clockwise seen from outside.

    Attributes
    ----------
    centroids, normals, areas : ndarray
        Per-panel centroid, outward unit normal and area.
    h : float
        Characteristic mesh size (mean edge length).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    centroids: np.ndarray = field(init=False, repr=False)
    normals: np.ndarray = field(init=False, repr=False)
    areas: np.ndarray = field(init=False, repr=False)
    h: float = field(init=False)

    def __post_init__(self):
        v = _frozen(self.vertices)
        t = _frozen(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or t.ndim != 2 or t.shape[1] != 3:
            raise MeshStructureError("vertices must be (V,3) and triangles (T,3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshStructureError("triangle index out of range")
        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        cr = np.cross(b - a, c - a)
        dbl = np.linalg.norm(cr, axis=1)
        if np.any(dbl <= 0.0):
            raise GeometryError("degenerate triangle with zero area")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "centroids", _frozen((a + b + c) / 3.0))
        object.__setattr__(self, "normals", _frozen(cr / dbl[:, None]))
        object.__setattr__(self, "areas", _frozen(0.5 * dbl))
        e = np.concatenate([b - a, c - b, a - c])
        object.__setattr__(self, "h", float(np.linalg.norm(e, axis=1).mean()))

    @property
    def n_panels(self) -> int:
        return len(self.triangles)

    @property
    def corners(self):
        """Tuple ``(A, B, C)`` of (T, 3) corner arrays."""
        t = self.triangles
        return self.vertices[t[:, 0]], self.vertices[t[:, 1]], self.vertices[t[:, 2]]

    def edges(self):
        """Undirected edges and the panels sharing them.

        Returns
        -------
        edges : (E, 2) ndarray
            Sorted vertex pairs.
        panels : (E, 2) ndarray
            The two adjacent panels of each edge.

        Raises
        ------
        MeshStructureError
            If an edge is not shared by exactly two panels.
        """
        t = self.triangles
        raw = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        owner = np.tile(np.arange(len(t)), 3)
        key = np.sort(raw, axis=1)
        uniq, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        if np.any(cnt != 2):
            raise MeshStructureError(
                f"open or non-manifold mesh: {int(np.sum(cnt != 2))} edges not shared by two panels"
            )
        order = np.argsort(inv, kind="stable")
        return uniq, owner[order].reshape(-1, 2)

    def volume(self) -> float:
        """Enclosed volume from the divergence theorem."""
        return float(np.sum(np.einsum("ij,ij->i", self.centroids, self.normals) * self.areas) / 3.0)

    def area(self) -> float:
        return float(self.areas.sum())

    def validate(self, reference_point=None) -> None:
        """Check closedness and outward orientation.

        Raises
        ------
        MeshStructureError, GeometryError
        """
        self.edges()
        ref = self.vertices.mean(axis=0) if reference_point is None else np.asarray(reference_point, float)
        s = np.einsum("ij,ij->i", self.centroids - ref, self.normals)
        if np.any(s <= 0.0):
            raise GeometryError(f"{int(np.sum(s <= 0))} panels have inward normals")

    def face_planes(self):
        """Outward normals and offsets ``n . x <= offset`` describing a convex body."""
        return self.normals, np.einsum("ij,ij->i", self.centroids, self.normals)

    def transformed(self, scale=1.0, shift=(0.0, 0.0, 0.0), rotation=None) -> "SurfaceMesh":
        """Return the mesh under ``x -> scale * R x + shift``."""
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, float).T
        return SurfaceMesh(scale * v + np.asarray(shift, float), self.triangles)

    def digest(self) -> str:
        """Short content hash used in output provenance."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.vertices).tobytes())
        h.update(np.ascontiguousarray(self.triangles).tobytes())
        return h.hexdigest()[:16]


_ICO_FACES = np.array(
    [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9], [5, 11, 4],
     [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8],
     [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
)


def _unit_icosphere(refinement: int):
    t = (1.0 + 5.0 ** 0.5) / 2.0
    v = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0], [0, -1, t], [0, 1, t],
         [0, -1, -t], [0, 1, -t], [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], float
    )
    verts = list(v / np.linalg.norm(v, axis=1)[:, None])
    faces = _ICO_FACES.copy()
    for _ in range(refinement):
        cache = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new)
    v = np.array(verts)
    a, b, c = v[faces[:, 0]], v[faces[:, 1]], v[faces[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) < 0
    faces[flip] = faces[flip][:, ::-1]
    return v, faces


def make_sphere(radius: float = 1.0, refinement: int = 3, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Icosphere triangulation of a sphere.

    Parameters
    ----------
    radius : float
        Sphere radius.
    refinement : int
        Number of midpoint subdivisions of the icosahedron (0 gives 20 panels).
    center : array_like
        Sphere center.
    """
    if refinement < 0:
        raise GeometryError("refinement must be >= 0")
    if radius <= 0:
        raise GeometryError("radius must be positive")
    v, f = _unit_icosphere(int(refinement))
    return SurfaceMesh(radius * v + np.asarray(center, float), f)


def make_ellipsoid(semi_axes, refinement: int = 3, center=(0.0, 0.0, 0.0),
                   angle_tol: float = 1e-6) -> SurfaceMesh:
    """Ellipsoid obtained by stretching the unit icosphere.

    Raises
    ------
    GeometryError
        If a semi-axis is not positive or the result fails the strict
        convexity check (e.g. a nearly flat ellipsoid).
    """
    ax = np.asarray(semi_axes, float)
    if ax.shape != (3,) or np.any(ax <= 0):
        raise GeometryError("semi_axes must be three positive numbers")
    v, f = _unit_icosphere(int(refinement))
    mesh = SurfaceMesh(v * ax + np.asarray(center, float), f)
    rep = check_strict_convexity(mesh, angle_tol=angle_tol)
    if not rep.is_convex:
        raise GeometryError(f"ellipsoid {tuple(ax)} rejected: {rep.summary()}")
    return mesh


@dataclass(frozen=True)
class ConvexityReport:
    """Outcome of :func:`check_strict_convexity`."""

    is_convex: bool
    offending_vertices: tuple
    flat_edges: tuple
    reflex_edges: tuple
    min_dihedral: float

    def summary(self) -> str:
        return (f"convex={self.is_convex}, off-hull vertices={len(self.offending_vertices)}, "
                f"flat edges={len(self.flat_edges)}, reflex edges={len(self.reflex_edges)}, "
                f"min dihedral={self.min_dihedral:.3e} rad")

    def __bool__(self):
        return self.is_convex


def check_strict_convexity(mesh: SurfaceMesh, angle_tol: float = 1e-6) -> ConvexityReport:
    """Test strict convexity of a closed mesh.

    A mesh passes when every vertex is a vertex of the convex hull of the
    vertex set and every edge bends outward by more than ``angle_tol``
    radians between its two panels.

    Raises
    ------
    MeshStructureError
        For open meshes.
    """
    edges, panels = mesh.edges()
    n = mesh.normals
    cosang = np.clip(np.einsum("ij,ij->i", n[panels[:, 0]], n[panels[:, 1]]), -1.0, 1.0)
    cross = np.linalg.norm(np.cross(n[panels[:, 0]], n[panels[:, 1]]), axis=1)
    dihedral = np.arctan2(cross, cosang)
    # reflex test: opposite vertex of panel 1 must lie below the plane of panel 0
    t = mesh.triangles
    opp = np.array([np.setdiff1d(t[p1], e)[0] for p1, e in zip(panels[:, 1], edges)])
    height = np.einsum("ij,ij->i", mesh.vertices[opp] - mesh.centroids[panels[:, 0]], n[panels[:, 0]])
    scale = mesh.h
    reflex = np.where(height > 1e-12 * scale)[0]
    flat = np.where(dihedral <= angle_tol)[0]
    bad = set()
    try:
        hull = ConvexHull(mesh.vertices)
        on_hull = np.zeros(len(mesh.vertices), bool)
        on_hull[hull.vertices] = True
        bad.update(np.where(~on_hull)[0].tolist())
    except QhullError:
        bad.update(range(len(mesh.vertices)))
    ok = not bad and flat.size == 0 and reflex.size == 0
    return ConvexityReport(
        is_convex=bool(ok),
        offending_vertices=tuple(sorted(int(i) for i in bad)),
        flat_edges=tuple(map(tuple, edges[flat].tolist())),
        reflex_edges=tuple(map(tuple, edges[reflex].tolist())),
        min_dihedral=float(dihedral.min()),
    )


@dataclass(frozen=True, eq=False)
class ParticleFrame:
    """Affine map ``x = scale * x_ref + center`` between B and D."""

    center: np.ndarray
    scale: float
    reference: SurfaceMesh

    def __post_init__(self):
        if not self.scale > 0:
            raise GeometryError("scale must be positive")
        object.__setattr__(self, "center", _frozen(np.asarray(self.center, float).reshape(3)))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def physical(self) -> SurfaceMesh:
        return self.reference.transformed(self.scale, self.center)

    def to_physical(self, x):
        return self.scale * np.asarray(x, float) + self.center

    def to_reference(self, x):
        return (np.asarray(x, float) - self.center) / self.scale


def rescale(frame: ParticleFrame, direction: str, x):
    """Map points between the reference and physical frames.

    Parameters
    ----------
    direction : {"to_reference", "to_physical"}
    """
    if direction == "to_physical":
        return frame.to_physical(x)
    if direction == "to_reference":
        return frame.to_reference(x)
    raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True, eq=False)
class VolumeGrid:
    """Interior quadrature points of a convex body.

    Attributes
    ----------
    points : (P, 3) ndarray
    weights : (P,) ndarray
    boundary_distance : (P,) ndarray
        Distance of each point to the boundary.
    h : float
        Grid spacing.
    """

    points: np.ndarray
    weights: np.ndarray
    boundary_distance: np.ndarray
    h: float

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(self.points))
        object.__setattr__(self, "weights", _frozen(self.weights))
        object.__setattr__(self, "boundary_distance", _frozen(self.boundary_distance))

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def interior_mask(self) -> np.ndarray:
        """Points at distance at least ``h`` from the boundary."""
        return self.boundary_distance >= self.h

    def inner(self, f, g):
        """Discrete L2 inner product of vector fields ``(P, 3, ...)``."""
        return np.einsum("p,pk...,pk...->...", self.weights, np.conj(f), g)

    def norm(self, f):
        return float(np.sqrt(np.real(self.inner(f, f))))


def voxel_grid(mesh: SurfaceMesh, h: float) -> VolumeGrid:
    """Cell-centre voxel grid clipped to the interior of a convex mesh.

    Cell centres lie on the lattice ``h * Z^3`` shifted to the mesh bounding
    box centre; each kept point carries weight ``h**3``.
    """
    if h <= 0:
        raise GeometryError("grid spacing must be positive")
    n, off = mesh.face_planes()
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    mid = 0.5 * (lo + hi)
    m = np.ceil(0.5 * (hi - lo) / h).astype(int) + 1
    axes = [mid[i] + h * np.arange(-m[i], m[i] + 1) for i in range(3)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    d = np.min(off[None, :] - X @ n.T, axis=1)
    keep = d > 0
    X, d = X[keep], d[keep]
    return VolumeGrid(X, np.full(len(X), h ** 3), d, float(h))


# ---------------------------------------------------------------- mesh I/O

def write_off(mesh: SurfaceMesh, path) -> None:
    """Write an ASCII OFF file."""
    lines = ["OFF", f"{len(mesh.vertices)} {mesh.n_panels} 0"]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path) -> SurfaceMesh:
    """Read an ASCII OFF file with triangular faces."""
    toks = [ln.split("#")[0].split() for ln in Path(path).read_text().splitlines()]
    toks = [t for t in toks if t]
    if not toks or toks[0][0] != "OFF":
        raise MeshStructureError("missing OFF header")
    head = toks[0][1:] if len(toks[0]) > 1 else toks[1]
    start = 1 if len(toks[0]) > 1 else 2
    nv, nf = int(head[0]), int(head[1])
    try:
        v = np.array([[float(s) for s in t[:3]] for t in toks[start:start + nv]])
        rows = toks[start + nv:start + nv + nf]
        if any(int(t[0]) != 3 for t in rows):
            raise MeshStructureError("only triangular OFF faces are supported")
        f = np.array([[int(s) for s in t[1:4]] for t in rows])
    except (ValueError, IndexError) as exc:
        raise MeshStructureError(f"malformed OFF file: {exc}") from exc
    if len(v) != nv or len(f) != nf:
        raise MeshStructureError("truncated OFF file")
    return SurfaceMesh(v, f)


def write_stl(mesh: SurfaceMesh, path) -> None:
    """Write a binary STL file."""
    a, b, c = mesh.corners
    with open(path, "wb") as fh:
        fh.write(b"plasmodes".ljust(80, b" "))
        fh.write(struct.pack("<I", mesh.n_panels))
        rec = np.zeros(mesh.n_panels, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
        rec["n"] = mesh.normals
        rec["v"] = np.stack([a, b, c], axis=1)
        fh.write(rec.tobytes())


def read_stl(path, merge_tol: float = 1e-6) -> SurfaceMesh:
    """Read a binary STL file, merging coincident vertices."""
    data = Path(path).read_bytes()
    if len(data) < 84:
        raise MeshStructureError("truncated STL header")
    (nt,) = struct.unpack("<I", data[80:84])
    dt = np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    if len(data) != 84 + nt * dt.itemsize:
        raise MeshStructureError("STL size does not match triangle count")
    rec = np.frombuffer(data, dtype=dt, count=nt, offset=84)
    pts = rec["v"].reshape(-1, 3).astype(float)
    key = np.round(pts / merge_tol).astype(np.int64)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return SurfaceMesh(pts[first], inv.ravel().reshape(-1, 3))
